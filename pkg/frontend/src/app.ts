/**
 * Role-scoped portal over the node API: registration and CHAP login,
 * consent toggles, record anchoring with in-browser hashing, prescribing,
 * dispensing, invoice payment, QR display, and a public chain explorer.
 * Data refreshes by polling every two seconds; the node is the only
 * source of every displayed value.
 */

import {
  ApiClient,
  ApiError,
  BlockJson,
  InvoiceRow,
  RecordAnchorRow,
} from "./api";
import { Wallet, hashFileLocally } from "./wallet";
import {
  PATIENT_FIELDS,
  PROVIDER_FIELDS,
  Payload,
  Role,
  formatEther,
  parseEther,
} from "./wire";

// Node URL: runtime global override, then build-time env, then dev default.
const NODE_URL =
  (globalThis as { MEDICHAIN_NODE_URL?: string }).MEDICHAIN_NODE_URL ??
  (import.meta as { env?: Record<string, string> }).env?.VITE_NODE_URL ??
  "http://127.0.0.1:7420";
const POLL_MS = 2000;

const client = new ApiClient(NODE_URL);
let wallet = Wallet.fromStorage();
let session: { role: Role; address: string } | null = null;
let tab: "dashboard" | "explorer" = "dashboard";
let refreshCurrent: (() => Promise<void>) | null = null;
let pollTimer: number | undefined;

// --- tiny DOM helpers -------------------------------------------------------

type Child = Node | string | null | undefined;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | ((event: Event) => void)> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key, value);
    } else if (key === "class") {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child !== null && child !== undefined) {
      node.append(child);
    }
  }
  return node;
}

function clear(node: HTMLElement): HTMLElement {
  node.replaceChildren();
  return node;
}

function shorten(hex: string, keep = 10): string {
  return hex.length > 2 * keep ? `${hex.slice(0, keep)}…${hex.slice(-6)}` : hex;
}

function banner(kind: "error" | "info", text: string): void {
  const box = document.getElementById("banner")!;
  box.className = `banner ${kind}`;
  box.textContent = text;
  if (kind === "info") {
    setTimeout(() => {
      if (box.textContent === text) box.textContent = "";
    }, 4000);
  }
}

function surface(err: unknown): void {
  if (err instanceof ApiError) {
    banner("error", err.detail ? `${err.code}: ${err.detail}` : err.code);
  } else {
    banner("error", String(err));
  }
}

async function act(button: HTMLButtonElement, fn: () => Promise<void>) {
  button.disabled = true;
  document.getElementById("banner")!.textContent = "";
  try {
    await fn();
    await refreshCurrent?.();
  } catch (err) {
    surface(err);
  } finally {
    button.disabled = false;
  }
}

// --- registration & login ----------------------------------------------------

const PROFILE_LABELS: Record<string, string> = {
  name: "Full name",
  phone: "Phone",
  email: "Email",
  date_of_birth: "Date of birth (YYYY-MM-DD)",
  home_address: "Home address",
  insurance_details: "Insurance details",
  postal_address: "Postal address",
  registration_number: "Registration number",
  organization: "Organization",
};

function profileInputs(role: Role): HTMLElement {
  const fields = role === "patient" ? PATIENT_FIELDS : PROVIDER_FIELDS;
  const wrap = el("div", { class: "stack profile-fields" });
  for (const field of fields) {
    wrap.append(
      el("label", {}, PROFILE_LABELS[field] ?? field),
      el("input", { name: field, required: "true" }),
    );
  }
  return wrap;
}

function readProfile(form: HTMLFormElement): Record<string, string> {
  const data = new FormData(form);
  const profile: Record<string, string> = {};
  for (const [key, value] of data.entries()) {
    if (key !== "password" && key !== "role" && key !== "seed") {
      profile[key] = String(value);
    }
  }
  return profile;
}

async function waitForRole(address: string, tries = 30): Promise<Role | null> {
  for (let i = 0; i < tries; i++) {
    const account = await client.account(address);
    if (account.role) return account.role;
    await new Promise((resolve) => setTimeout(resolve, POLL_MS / 2));
  }
  return null;
}

function authView(): HTMLElement {
  const container = el("div", { class: "cards" });

  const registerForm = el("form", { class: "stack" }) as HTMLFormElement;
  const roleSelect = el("select", { name: "role" },
    el("option", { value: "patient" }, "patient"),
    el("option", { value: "doctor" }, "doctor"),
    el("option", { value: "pharmacist" }, "pharmacist"),
  );
  let fieldsBox = profileInputs("patient");
  roleSelect.addEventListener("change", () => {
    const next = profileInputs(roleSelect.value as Role);
    fieldsBox.replaceWith(next);
    fieldsBox = next;
  });
  const registerButton = el("button", { class: "action" },
                            "Create identity & register") as HTMLButtonElement;
  registerForm.append(
    el("label", {}, "Role"), roleSelect,
    fieldsBox,
    el("label", {}, "Portal password"),
    el("input", { name: "password", type: "password", required: "true" }),
    registerButton,
  );
  registerForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(registerButton, async () => {
      const role = roleSelect.value as Role;
      const password = String(new FormData(registerForm).get("password"));
      const profile = readProfile(registerForm);
      wallet = Wallet.createAndStore();
      const payload = { type: "register", role, profile } as unknown as Payload;
      await wallet.send(client, payload);
      await wallet.enroll(client, password);
      banner("info", "registration submitted; waiting for a mined block…");
      const mined = await waitForRole(wallet.address);
      if (!mined) throw new Error("registration not mined yet; try logging in later");
      await wallet.login(client, password);
      session = { role: mined, address: wallet.address };
      render();
    });
  });

  const loginForm = el("form", { class: "stack" }) as HTMLFormElement;
  const loginButton = el("button", { class: "action" }, "Log in") as HTMLButtonElement;
  loginForm.append(
    el("div", { class: "muted" },
       wallet ? `stored identity: ${wallet.address}` : "no identity on this device"),
    el("label", {}, "Import seed (hex, optional)"),
    el("input", { name: "seed", placeholder: "leave empty to use the stored identity" }),
    el("label", {}, "Portal password"),
    el("input", { name: "password", type: "password", required: "true" }),
    loginButton,
  );
  loginForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(loginButton, async () => {
      const data = new FormData(loginForm);
      const seed = String(data.get("seed") ?? "").trim();
      if (seed) wallet = Wallet.fromSeedHex(seed);
      if (!wallet) throw new Error("create or import an identity first");
      await wallet.login(client, String(data.get("password")));
      const account = await client.account(wallet.address);
      if (!account.role) throw new Error("address holds no role on-chain");
      session = { role: account.role, address: wallet.address };
      render();
    });
  });

  container.append(
    el("div", { class: "card" }, el("h2", {}, "New member"), registerForm),
    el("div", { class: "card" }, el("h2", {}, "Returning member"), loginForm),
  );
  return container;
}

// --- shared table renderers -----------------------------------------------------

function recordsTable(rows: RecordAnchorRow[]): HTMLElement {
  const table = el("table", {},
    el("tr", {},
       el("th", {}, "#"), el("th", {}, "type"), el("th", {}, "digest"),
       el("th", {}, "author"), el("th", {}, "height")));
  for (const row of rows) {
    table.append(el("tr", {},
      el("td", {}, String(row.id)),
      el("td", {}, row.record_type),
      el("td", { class: "mono" }, shorten(row.record_hash, 16)),
      el("td", { class: "mono" }, shorten(row.author)),
      el("td", {}, String(row.anchored_at)),
    ));
  }
  if (!rows.length) table.append(el("tr", {}, el("td", {}, "(none)")));
  return table;
}

function invoiceRow(invoice: InvoiceRow, payAction?: (id: number,
                    btn: HTMLButtonElement) => void): HTMLElement {
  const cells = [
    el("td", {}, String(invoice.id)),
    el("td", {}, `${formatEther(invoice.amount)} eth`),
    el("td", { class: "mono" }, shorten(invoice.payee)),
    el("td", {}, el("span",
      { class: invoice.status === "paid" ? "pill" : "pill warn" },
      invoice.status)),
  ];
  const row = el("tr", {}, ...cells);
  if (payAction) {
    const button = el("button", { class: "mini" }, "Pay") as HTMLButtonElement;
    button.addEventListener("click", () => payAction(invoice.id, button));
    row.append(el("td", {},
      invoice.status === "unpaid" ? button : el("span", {}, "")));
  }
  return row;
}

// --- patient dashboard -----------------------------------------------------------

function patientView(address: string): { root: HTMLElement;
                                         refresh: () => Promise<void> } {
  const balanceBox = el("div", { class: "metric" }, "…");
  const recordsBox = el("div", {});
  const qrBox = el("div", {});
  const grantsBox = el("div", {});
  const invoicesBox = el("div", {});

  const grantForm = el("form", { class: "stack" }) as HTMLFormElement;
  const grantButton = el("button", { class: "action" },
                         "Grant access") as HTMLButtonElement;
  grantForm.append(
    el("label", {}, "Provider address"),
    el("input", { name: "grantee", placeholder: "40-hex address" }),
    grantButton,
  );
  grantForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(grantButton, async () => {
      const grantee = String(new FormData(grantForm).get("grantee")).trim();
      await wallet!.send(client, { type: "grant_access", grantee });
      banner("info", "grant submitted; takes effect after the next block");
    });
  });

  const anchorForm = el("form", { class: "stack" }) as HTMLFormElement;
  const anchorButton = el("button", { class: "action" },
                          "Anchor record") as HTMLButtonElement;
  const fileInput = el("input", { name: "file", type: "file" }) as HTMLInputElement;
  anchorForm.append(
    el("label", {}, "Record file (hashed locally; bytes stay here)"),
    fileInput,
    el("label", {}, "Record type"),
    el("input", { name: "record_type", value: "document" }),
    anchorButton,
  );
  anchorForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(anchorButton, async () => {
      const file = fileInput.files?.[0];
      if (!file) throw new Error("choose a file first");
      const digest = await hashFileLocally(file);
      await wallet!.send(client, {
        type: "anchor_record",
        patient: address,
        record_hash: digest,
        record_type: String(new FormData(anchorForm).get("record_type")),
      });
      banner("info", `anchored digest ${shorten(digest, 12)}`);
    });
  });

  const root = el("div", { class: "cards" },
    el("div", { class: "card" },
       el("h2", {}, "Balance"), balanceBox,
       el("div", { class: "muted mono" }, address)),
    el("div", { class: "card" },
       el("h2", {}, "My records"), recordsBox,
       el("h3", {}, "Share via QR"), qrBox,
       el("h3", {}, "Anchor a new record"), anchorForm),
    el("div", { class: "card" },
       el("h2", {}, "Consent"), grantsBox,
       el("h3", {}, "Grant a provider"), grantForm),
    el("div", { class: "card" },
       el("h2", {}, "Invoices"), invoicesBox),
  );

  async function refresh(): Promise<void> {
    const account = await client.account(address);
    clear(balanceBox).append(`${formatEther(account.balance)} `,
                             el("small", {}, "eth"));

    const { records } = await client.records(address);
    clear(recordsBox).append(recordsTable(records));
    if (records.length) {
      const qr = await client.qr(address);
      clear(qrBox).append(
        el("div", { class: "mono muted" }, qr.payload),
        el("pre", { class: "qr" }, qr.ascii),
      );
    } else {
      clear(qrBox).append(el("span", { class: "muted" }, "no records yet"));
    }

    const { grants } = await client.grants({ patient: address });
    const list = el("table", {},
      el("tr", {}, el("th", {}, "provider"), el("th", {}, "status"),
         el("th", {}, "")));
    for (const grant of grants) {
      const toggle = el("button",
        { class: grant.active ? "mini danger" : "mini" },
        grant.active ? "Revoke" : "Re-grant") as HTMLButtonElement;
      toggle.addEventListener("click", () => void act(toggle, async () => {
        const type = grant.active ? "revoke_access" : "grant_access";
        await wallet!.send(client, { type, grantee: grant.grantee } as Payload);
        banner("info", `${type.replace("_access", "")} submitted`);
      }));
      list.append(el("tr", {},
        el("td", { class: "mono" }, shorten(grant.grantee)),
        el("td", {}, el("span", { class: grant.active ? "pill" : "pill warn" },
                        grant.active ? "active" : "revoked")),
        el("td", {}, toggle)));
    }
    if (!grants.length) list.append(el("tr", {}, el("td", {}, "(none)")));
    clear(grantsBox).append(list);

    const { invoices } = await client.invoices({ patient: address });
    const table = el("table", {},
      el("tr", {}, el("th", {}, "#"), el("th", {}, "amount"),
         el("th", {}, "payee"), el("th", {}, "status"), el("th", {}, "")));
    for (const invoice of invoices) {
      table.append(invoiceRow(invoice, (id, btn) => void act(btn, async () => {
        await wallet!.send(client, { type: "pay_invoice", invoice_id: id });
        banner("info", "payment submitted; balance updates after the next block");
      })));
    }
    if (!invoices.length) table.append(el("tr", {}, el("td", {}, "(none)")));
    clear(invoicesBox).append(table);
  }

  return { root, refresh };
}

// --- doctor dashboard ----------------------------------------------------------------

function doctorView(address: string): { root: HTMLElement;
                                        refresh: () => Promise<void> } {
  const patientsBox = el("div", {});
  const viewerBox = el("div", {});

  const anchorForm = el("form", { class: "stack" }) as HTMLFormElement;
  const anchorButton = el("button", { class: "action" },
                          "Hash & anchor") as HTMLButtonElement;
  const anchorFile = el("input", { type: "file", name: "file" }) as HTMLInputElement;
  anchorForm.append(
    el("label", {}, "Patient address"),
    el("input", { name: "patient" }),
    el("label", {}, "Record file (hashed in the browser)"),
    anchorFile,
    el("label", {}, "Record type"),
    el("input", { name: "record_type", value: "clinical-note" }),
    anchorButton,
  );
  anchorForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(anchorButton, async () => {
      const file = anchorFile.files?.[0];
      if (!file) throw new Error("choose a file first");
      const digest = await hashFileLocally(file);
      await wallet!.send(client, {
        type: "anchor_record",
        patient: String(new FormData(anchorForm).get("patient")).trim(),
        record_hash: digest,
        record_type: String(new FormData(anchorForm).get("record_type")),
      });
      banner("info", `anchored digest ${shorten(digest, 12)}`);
    });
  });

  const rxForm = el("form", { class: "stack" }) as HTMLFormElement;
  const rxButton = el("button", { class: "action" }, "Prescribe") as HTMLButtonElement;
  const rxFile = el("input", { type: "file", name: "file" }) as HTMLInputElement;
  rxForm.append(
    el("label", {}, "Patient address"),
    el("input", { name: "patient" }),
    el("label", {}, "Pharmacist address"),
    el("input", { name: "pharmacist" }),
    el("label", {}, "Prescription file (hashed in the browser)"),
    rxFile,
    el("label", {}, "Price (ether)"),
    el("input", { name: "price", value: "2" }),
    rxButton,
  );
  rxForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(rxButton, async () => {
      const file = rxFile.files?.[0];
      if (!file) throw new Error("choose a prescription file first");
      const digest = await hashFileLocally(file);
      const data = new FormData(rxForm);
      await wallet!.send(client, {
        type: "prescribe",
        patient: String(data.get("patient")).trim(),
        pharmacist: String(data.get("pharmacist")).trim(),
        rx_hash: digest,
        price: parseEther(String(data.get("price"))).toString(),
      });
      banner("info", "prescription submitted; the invoice is created with it");
    });
  });

  const root = el("div", { class: "cards" },
    el("div", { class: "card" },
       el("h2", {}, "Patients who granted me access"), patientsBox,
       el("h3", {}, "Patient records"), viewerBox),
    el("div", { class: "card" },
       el("h2", {}, "Anchor a record"), anchorForm),
    el("div", { class: "card" },
       el("h2", {}, "Prescribe"), rxForm),
  );

  async function refresh(): Promise<void> {
    const { grants } = await client.grants({ grantee: address, active: true });
    const table = el("table", {},
      el("tr", {}, el("th", {}, "patient"), el("th", {}, "since"),
         el("th", {}, "")));
    for (const grant of grants) {
      const view = el("button", { class: "mini" }, "View records") as HTMLButtonElement;
      view.addEventListener("click", () => void act(view, async () => {
        const { records } = await client.records(grant.patient);
        clear(viewerBox).append(
          el("div", { class: "muted mono" }, grant.patient),
          recordsTable(records));
      }));
      table.append(el("tr", {},
        el("td", { class: "mono" }, shorten(grant.patient)),
        el("td", {}, `block ${grant.granted_at}`),
        el("td", {}, view)));
    }
    if (!grants.length) {
      table.append(el("tr", {}, el("td", {}, "(no active grants)")));
      clear(viewerBox);
    }
    clear(patientsBox).append(table);
  }

  return { root, refresh };
}

// --- pharmacist dashboard ----------------------------------------------------------

function pharmacistView(address: string): { root: HTMLElement;
                                            refresh: () => Promise<void> } {
  const rxBox = el("div", {});
  const invoicesBox = el("div", {});
  const root = el("div", { class: "cards" },
    el("div", { class: "card" },
       el("h2", {}, "Incoming prescriptions"), rxBox),
    el("div", { class: "card" },
       el("h2", {}, "Invoices payable to me"), invoicesBox),
  );

  async function refresh(): Promise<void> {
    const { prescriptions } = await client.prescriptions();
    const mine = prescriptions.filter((rx) => rx.pharmacist === address);
    const table = el("table", {},
      el("tr", {}, el("th", {}, "#"), el("th", {}, "patient"),
         el("th", {}, "digest"), el("th", {}, "price"),
         el("th", {}, "status"), el("th", {}, "")));
    for (const rx of mine) {
      const dispense = el("button", { class: "mini" }, "Dispense") as HTMLButtonElement;
      dispense.addEventListener("click", () => void act(dispense, async () => {
        await wallet!.send(client, { type: "dispense", prescription_id: rx.id });
        banner("info", "dispense submitted");
      }));
      table.append(el("tr", {},
        el("td", {}, String(rx.id)),
        el("td", { class: "mono" }, shorten(rx.patient)),
        el("td", { class: "mono" }, shorten(rx.rx_hash, 12)),
        el("td", {}, `${formatEther(rx.price)} eth`),
        el("td", {}, el("span",
          { class: rx.status === "open" ? "pill warn" : "pill" }, rx.status)),
        el("td", {}, rx.status === "open" ? dispense : el("span", {}, "")),
      ));
    }
    if (!mine.length) table.append(el("tr", {}, el("td", {}, "(none)")));
    clear(rxBox).append(table);

    const { invoices } = await client.invoices({ payee: address });
    const invTable = el("table", {},
      el("tr", {}, el("th", {}, "#"), el("th", {}, "amount"),
         el("th", {}, "payee"), el("th", {}, "status")));
    for (const invoice of invoices) invTable.append(invoiceRow(invoice));
    if (!invoices.length) invTable.append(el("tr", {}, el("td", {}, "(none)")));
    clear(invoicesBox).append(invTable);
  }

  return { root, refresh };
}

// --- chain explorer ---------------------------------------------------------------------

function explorerView(): { root: HTMLElement; refresh: () => Promise<void> } {
  const summaryBox = el("div", {});
  const blocksBox = el("div", {});
  const detailBox = el("div", {});
  const lookupBox = el("div", {});

  const lookupForm = el("form", { class: "stack" }) as HTMLFormElement;
  const lookupButton = el("button", { class: "action secondary" },
                          "Look up") as HTMLButtonElement;
  lookupForm.append(
    el("label", {}, "Account address"),
    el("input", { name: "address" }),
    lookupButton,
  );
  lookupForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void act(lookupButton, async () => {
      const address = String(new FormData(lookupForm).get("address")).trim();
      const account = await client.account(address);
      clear(lookupBox).append(el("table", {},
        el("tr", {}, el("th", {}, "balance"),
           el("td", {}, `${formatEther(account.balance)} eth`)),
        el("tr", {}, el("th", {}, "nonce"), el("td", {}, String(account.nonce))),
        el("tr", {}, el("th", {}, "role"),
           el("td", {}, account.role ?? "(unregistered)")),
      ));
    });
  });

  function describeTx(tx: BlockJson["transactions"][number]): string {
    const p = tx.payload;
    switch (p.type) {
      case "register": return `register ${p.role}`;
      case "grant_access": return `grant → ${shorten(p.grantee)}`;
      case "revoke_access": return `revoke → ${shorten(p.grantee)}`;
      case "anchor_record": return `anchor ${p.record_type} for ${shorten(p.patient)}`;
      case "prescribe":
        return `prescribe ${formatEther(p.price)} eth for ${shorten(p.patient)}`;
      case "dispense": return `dispense rx #${p.prescription_id}`;
      case "pay_invoice": return `pay invoice #${p.invoice_id}`;
      case "transfer": return `transfer ${formatEther(p.amount)} eth → ${shorten(p.to)}`;
    }
  }

  const root = el("div", { class: "cards" },
    el("div", { class: "card" },
       el("h2", {}, "Node"), summaryBox,
       el("h3", {}, "Account lookup"), lookupForm, lookupBox),
    el("div", { class: "card" },
       el("h2", {}, "Blocks"), blocksBox,
       el("h3", {}, "Block detail"), detailBox),
  );

  async function refresh(): Promise<void> {
    const health = await client.health();
    clear(summaryBox).append(el("table", {},
      el("tr", {}, el("th", {}, "height"), el("td", {}, String(health.height))),
      el("tr", {}, el("th", {}, "difficulty"),
         el("td", {}, `${health.difficulty_bits} bits`)),
      el("tr", {}, el("th", {}, "mempool"),
         el("td", {}, String(health.mempool_size))),
      el("tr", {}, el("th", {}, "state digest"),
         el("td", { class: "mono" }, shorten(health.state_digest, 16))),
    ));

    const { blocks } = await client.chain();
    const table = el("table", {},
      el("tr", {}, el("th", {}, "height"), el("th", {}, "time"),
         el("th", {}, "txs"), el("th", {}, "merkle root"), el("th", {}, "")));
    for (const block of blocks.slice(-15).reverse()) {
      const open = el("button", { class: "mini" }, "Txs") as HTMLButtonElement;
      open.addEventListener("click", () => {
        const list = el("table", {},
          el("tr", {}, el("th", {}, "sender"), el("th", {}, "action"),
             el("th", {}, "nonce")));
        for (const tx of block.transactions) {
          list.append(el("tr", {},
            el("td", { class: "mono" }, shorten(tx.sender)),
            el("td", {}, describeTx(tx)),
            el("td", {}, String(tx.nonce))));
        }
        if (!block.transactions.length) {
          list.append(el("tr", {}, el("td", {}, "(empty block)")));
        }
        clear(detailBox).append(
          el("div", { class: "muted" }, `block ${block.header.height}`), list);
      });
      table.append(el("tr", {},
        el("td", {}, String(block.header.height)),
        el("td", {}, new Date(block.header.timestamp * 1000)
                       .toISOString().replace("T", " ").slice(0, 19)),
        el("td", {}, String(block.tx_count)),
        el("td", { class: "mono" }, shorten(block.header.merkle_root, 12)),
        el("td", {}, open)));
    }
    clear(blocksBox).append(table);
  }

  return { root, refresh };
}

// --- shell ------------------------------------------------------------------------------

function render(): void {
  const app = document.getElementById("app")!;
  clear(app as HTMLElement);

  const who = session
    ? `${session.role} ${shorten(session.address)}`
    : wallet
      ? `identity ${shorten(wallet.address)} (not logged in)`
      : "no identity";
  const logout = el("button", { class: "mini" },
                    session ? "Log out" : "Forget identity") as HTMLButtonElement;
  logout.addEventListener("click", () => {
    if (session) {
      session = null;
      client.token = null;
    } else {
      Wallet.forget();
      wallet = null;
    }
    render();
  });

  const tabs = el("nav", { class: "tabs" });
  for (const name of ["dashboard", "explorer"] as const) {
    const button = el("button",
      { class: tab === name ? "active" : "" },
      name === "dashboard" ? "Dashboard" : "Chain explorer");
    button.addEventListener("click", () => {
      tab = name;
      render();
    });
    tabs.append(button);
  }

  const main = el("main", {});
  const bannerBox = el("div", { id: "banner", class: "banner" });

  let view: { root: HTMLElement; refresh: () => Promise<void> } | null = null;
  if (tab === "explorer") {
    view = explorerView();
  } else if (!session || !wallet) {
    main.append(authView());
  } else if (session.role === "patient") {
    view = patientView(session.address);
  } else if (session.role === "doctor") {
    view = doctorView(session.address);
  } else {
    view = pharmacistView(session.address);
  }

  app.append(
    el("header", { class: "topbar" },
       el("h1", {}, "medichain portal"),
       el("span", { class: "spacer" }),
       el("span", { class: "who" }, who),
       logout),
    tabs,
    bannerBox,
    main,
  );

  if (view) {
    main.append(view.root);
    refreshCurrent = view.refresh;
    void view.refresh().catch(surface);
  } else {
    refreshCurrent = null;
  }

  window.clearInterval(pollTimer);
  pollTimer = window.setInterval(() => {
    void refreshCurrent?.().catch(() => {
      /* transient poll errors stay silent; actions surface their own */
    });
  }, POLL_MS);
}

render();
