import { readFileSync } from "node:fs";
import { vi } from "vitest";

/** Raw bytes of a recorded service response, as the server sent them. */
export function fixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

export type RecordedCall = {
  url: string;
  method: string;
  body: string | null;
};

export type MockResponse = {
  status: number;
  body: string;
};

/** Install a fetch stub; returns the list of calls it has served. */
export function installFetch(
  handler: (call: RecordedCall) => MockResponse | Promise<MockResponse>,
): RecordedCall[] {
  const calls: RecordedCall[] = [];
  vi.stubGlobal(
    "fetch",
    async (input: unknown, init?: { method?: string; body?: unknown }) => {
      const call: RecordedCall = {
        url: String(input),
        method: init?.method ?? "GET",
        body: typeof init?.body === "string" ? init.body : null,
      };
      calls.push(call);
      const res = await handler(call);
      return new Response(res.body, {
        status: res.status,
        headers: { "content-type": "application/json" },
      });
    },
  );
  return calls;
}

/** Route requests the way the recorded service did: reversed spans are 400,
 *  spans covering the declared branch at 25 mm return the flagged result. */
export function serviceHandler(): (call: RecordedCall) => MockResponse {
  const open = fixture("open.json");
  const coreg = fixture("coregistration.json");
  const clear = fixture("simulate_clear.json");
  const branch = fixture("simulate_branch.json");
  const invalid = fixture("simulate_invalid.json");
  return (call) => {
    if (call.method === "POST" && call.url.endsWith("/cases")) {
      return { status: 200, body: open };
    }
    if (call.url.endsWith("/coregistration")) {
      return { status: 200, body: coreg };
    }
    if (call.method === "POST" && call.url.endsWith("/simulate")) {
      const plan = JSON.parse(call.body ?? "{}") as {
        x_prox_mm: number;
        x_dist_mm: number;
      };
      if (plan.x_prox_mm >= plan.x_dist_mm) return { status: 400, body: invalid };
      if (plan.x_prox_mm <= 25 && plan.x_dist_mm >= 25) {
        return { status: 200, body: branch };
      }
      return { status: 200, body: clear };
    }
    return {
      status: 404,
      body: JSON.stringify({ detail: { cause: "unknown_session", message: "no route" } }),
    };
  };
}

/** Spin microtasks until cond holds; deterministic alternative to timers. */
export async function until(cond: () => boolean): Promise<void> {
  for (let i = 0; i < 200 && !cond(); i++) await Promise.resolve();
  if (!cond()) throw new Error("condition not reached");
}
