/**
 * Typed client over the node's JSON endpoints. Every displayed value in
 * the portal is fetched through here; nothing is derived client-side
 * beyond local hashing and signing.
 */

import type { Payload, Role, SignedTx } from "./wire";

export class ApiError extends Error {
  constructor(public code: string, public detail: string, public status: number) {
    super(detail ? `${code}: ${detail}` : code);
  }
}

export interface AccountInfo {
  address: string;
  balance: string; // wei, decimal string
  nonce: number;
  role: Role | null;
}

export interface RecordAnchorRow {
  id: number;
  patient: string;
  author: string;
  record_hash: string;
  record_type: string;
  anchored_at: number;
}

export interface InvoiceRow {
  id: number;
  prescription_id: number;
  payee: string;
  amount: string;
  status: "unpaid" | "paid";
  patient?: string;
}

export interface PrescriptionRow {
  id: number;
  doctor: string;
  patient: string;
  pharmacist: string;
  rx_hash: string;
  price: string;
  status: "open" | "dispensed";
  invoice?: InvoiceRow | null;
}

export interface GrantRow {
  patient: string;
  grantee: string;
  active: boolean;
  granted_at: number;
  revoked_at: number | null;
}

export interface BlockJson {
  header: {
    height: number;
    prev_hash: string;
    merkle_root: string;
    timestamp: number;
    difficulty_bits: number;
    nonce: number;
  };
  tx_count: number;
  transactions: SignedTx[];
}

export interface QrResponse {
  payload: string;
  digest_kind: string;
  version: number;
  side: number;
  ascii: string;
  pbm?: string;
}

export interface HealthInfo {
  status: string;
  height: number;
  tip_hash: string;
  state_digest: string;
  mempool_size: number;
  difficulty_bits: number;
}

type FetchLike = typeof fetch;

export class ApiClient {
  token: string | null = null;

  constructor(public baseUrl: string,
              private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(method: string, path: string,
                           body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(payload.error ?? "HttpError",
                         payload.detail ?? "", response.status);
    }
    return payload as T;
  }

  health(): Promise<HealthInfo> {
    return this.request("GET", "/health");
  }

  chain(): Promise<{ height: number; blocks: BlockJson[] }> {
    return this.request("GET", "/chain");
  }

  block(height: number): Promise<BlockJson> {
    return this.request("GET", `/block/${height}`);
  }

  mempool(): Promise<{ pending: SignedTx[] }> {
    return this.request("GET", "/mempool");
  }

  account(address: string): Promise<AccountInfo> {
    return this.request("GET", `/accounts/${address}`);
  }

  submitTx(tx: SignedTx, preflight = true): Promise<{ txid: string }> {
    const query = preflight ? "?preflight=true" : "";
    return this.request("POST", `/tx${query}`, tx);
  }

  mine(allowEmpty = false): Promise<{ block: BlockJson; dropped: unknown[] }> {
    return this.request("POST", "/mine", { allow_empty: allowEmpty });
  }

  challenge(): Promise<{ challenge_id: string; nonce: string; lifetime: number }> {
    return this.request("POST", "/auth/challenge");
  }

  enroll(body: { address: string; stored_hash: string; public_key: string;
                 signature: string }): Promise<{ enrolled: boolean }> {
    return this.request("POST", "/auth/enroll", body);
  }

  async login(body: { address: string; challenge_id: string;
                      response: string }): Promise<string> {
    const session = await this.request<{ token: string }>(
      "POST", "/auth/login", body);
    this.token = session.token;
    return session.token;
  }

  records(patient: string): Promise<{ records: RecordAnchorRow[] }> {
    return this.request("GET", `/patients/${patient}/records`);
  }

  grants(filter: { patient?: string; grantee?: string;
                   active?: boolean }): Promise<{ grants: GrantRow[] }> {
    const params = new URLSearchParams();
    if (filter.patient) params.set("patient", filter.patient);
    if (filter.grantee) params.set("grantee", filter.grantee);
    if (filter.active !== undefined) params.set("active", String(filter.active));
    return this.request("GET", `/grants?${params}`);
  }

  prescriptions(): Promise<{ prescriptions: PrescriptionRow[] }> {
    return this.request("GET", "/prescriptions");
  }

  invoices(filter: { patient?: string; payee?: string } = {}):
      Promise<{ invoices: InvoiceRow[] }> {
    const params = new URLSearchParams();
    if (filter.patient) params.set("patient", filter.patient);
    if (filter.payee) params.set("payee", filter.payee);
    return this.request("GET", `/invoices?${params}`);
  }

  qr(patient: string, recordId?: number): Promise<QrResponse> {
    const params = new URLSearchParams();
    if (recordId !== undefined) params.set("record_id", String(recordId));
    const query = params.size ? `?${params}` : "";
    return this.request("GET", `/qr/${patient}${query}`);
  }
}

export type { Payload, Role, SignedTx };
