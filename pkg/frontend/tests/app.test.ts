// @vitest-environment jsdom
/**
 * Mounts the real app against a live node and walks a patient session at
 * the DOM level: register form -> dashboard -> records, balance, QR.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

let node: ChildProcess;
let nodeUrl: string;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.on("error", reject);
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitForNode(url: string, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${url}/health`);
      if (response.ok) return;
    } catch {
      /* booting */
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("node did not come up");
}

function fill(form: Element, name: string, value: string): void {
  const input = form.querySelector<HTMLInputElement>(`[name="${name}"]`);
  if (!input) throw new Error(`no input ${name}`);
  input.value = value;
}

async function until(check: () => boolean, ms = 15000): Promise<void> {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("condition not met in time");
}

beforeAll(async () => {
  const port = await freePort();
  const dataDir = mkdtempSync(join(tmpdir(), "portal-ui-node-"));
  // automine so the registration block lands without manual mining
  node = spawn("medichain", [
    "serve", "--dev", "--port", String(port), "--data-dir", dataDir,
    "--difficulty", "2", "--automine", "0.2",
  ], { stdio: "ignore" });
  nodeUrl = `http://127.0.0.1:${port}`;
  (globalThis as { MEDICHAIN_NODE_URL?: string }).MEDICHAIN_NODE_URL = nodeUrl;
  await waitForNode(nodeUrl);
}, 30000);

afterAll(() => {
  node?.kill();
});

describe("portal UI", () => {
  it("registers a patient through the form and reaches the dashboard", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    await import("../src/app");

    // auth view is up
    await until(() => document.querySelectorAll("form").length >= 2);
    const forms = document.querySelectorAll("form");
    const registerForm = forms[0];

    fill(registerForm, "name", "Dom Tester");
    fill(registerForm, "phone", "555-9");
    fill(registerForm, "email", "dom@test");
    fill(registerForm, "date_of_birth", "1990-05-05");
    fill(registerForm, "home_address", "9 DOM Lane");
    fill(registerForm, "insurance_details", "DOM-INS-1");
    fill(registerForm, "password", "dom-ui-password");
    registerForm.dispatchEvent(new Event("submit", { bubbles: true,
                                                     cancelable: true }));

    // registration waits for a mined block, then swaps in the dashboard
    await until(() => document.body.textContent!.includes("Balance"), 20000);
    expect(document.body.textContent).toContain("My records");
    expect(document.body.textContent).toContain("Consent");
    expect(document.body.textContent).toContain("Invoices");

    // header shows the logged-in role
    await until(() => document.querySelector(".who")!.textContent!
                        .startsWith("patient"));

    // the seed stayed local to the browser storage
    const seed = localStorage.getItem("medichain.seed");
    expect(seed).toMatch(/^[0-9a-f]{64}$/);

    // explorer tab renders blocks fetched from the node
    const tabs = document.querySelectorAll("nav.tabs button");
    (tabs[1] as HTMLButtonElement).click();
    await until(() => document.body.textContent!.includes("state digest"));
    expect(document.body.textContent).toContain("Blocks");
  }, 40000);
});
