/** Fixture loading plus a fixture-backed fetch.
 *
 * Fixtures are responses recorded from the real API by
 * scripts/record_fixtures.py; tests replay them through FakeServer so
 * the client code under test sees genuine wire shapes, headers
 * included, without a live server.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export interface Fixture {
  method: string;
  path: string;
  status: number;
  headers: Record<string, string>;
  body: unknown;
}

const cache = new Map<string, unknown>();

/** Parse a fixture file; every call returns a fresh copy. */
export function rawJson<T>(name: string): T {
  if (!cache.has(name)) {
    // cwd is the frontend package root when vitest runs
    const path = join(process.cwd(), "tests", "fixtures", name);
    cache.set(name, JSON.parse(readFileSync(path, "utf8")));
  }
  return structuredClone(cache.get(name)) as T;
}

export function fixture(name: string): Fixture {
  return rawJson<Fixture>(name);
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: string | null;
  headers: Record<string, string>;
  at: number;
}

export function respond(fix: Fixture): Response {
  return new Response(JSON.stringify(fix.body), {
    status: fix.status,
    headers: {
      "Content-Type": fix.headers["content-type"] || "application/json",
      "X-WB-Schema": fix.headers["x-wb-schema"],
    },
  });
}

export class FakeServer {
  requests: RecordedRequest[] = [];
  private routes = new Map<string, Fixture[]>();

  /** Register fixtures; several for one method+path serve in order, the last repeats. */
  serve(...fixtures: Fixture[]): this {
    for (const fix of fixtures) {
      const key = `${fix.method} ${fix.path}`;
      const queue = this.routes.get(key);
      if (queue) queue.push(fix);
      else this.routes.set(key, [fix]);
    }
    return this;
  }

  count(method: string, path: string): number {
    return this.requests.filter((r) => r.method === method && r.path === path).length;
  }

  readonly fetch: typeof fetch = (input, init) => {
    const path =
      typeof input === "string" ? input : input instanceof URL ? input.toString() : input.url;
    const method = (init?.method ?? "GET").toUpperCase();
    const headers: Record<string, string> = {};
    if (init?.headers && !(init.headers instanceof Headers) && !Array.isArray(init.headers)) {
      Object.assign(headers, init.headers as Record<string, string>);
    }
    this.requests.push({
      method,
      path,
      body: typeof init?.body === "string" ? init.body : null,
      headers,
      at: Date.now(),
    });
    const queue = this.routes.get(`${method} ${path}`);
    if (!queue || queue.length === 0) {
      return Promise.reject(new Error(`no fixture for ${method} ${path}`));
    }
    const fix = queue.length > 1 ? queue.shift()! : queue[0];
    return Promise.resolve(respond(fix));
  };
}

export function freshRoot(): HTMLElement {
  document.body.innerHTML = '<div id="root"></div>';
  return document.getElementById("root")!;
}

export const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

/* A digit that does not sit inside an identifier like r2 or macro_f1. */
const NUMERIC = /(?<![A-Za-z_])[0-9]/;

/** Text nodes showing numbers without a data-prov ancestor. */
export function provenanceViolations(scope: HTMLElement): string[] {
  const out: string[] = [];
  const walker = document.createTreeWalker(scope, NodeFilter.SHOW_TEXT);
  let node: Node | null;
  while ((node = walker.nextNode())) {
    const text = node.textContent ?? "";
    if (!NUMERIC.test(text)) continue;
    let parent = node.parentElement;
    let tagged = false;
    while (parent) {
      if (parent.hasAttribute("data-prov")) {
        tagged = true;
        break;
      }
      parent = parent.parentElement;
    }
    if (!tagged) out.push(text.trim());
  }
  return out;
}
