/**
 * Shared test scaffolding: fixture loading, a route-table fetch mock
 * that records every request, and number harvesting for the
 * "displayed numbers are server numbers" contract.
 */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import type { FetchLike } from "../src/api.js";

/** Parse a recorded service payload from tests/fixtures. */
export function loadFixture<T>(name: string): T {
  const path = resolve(process.cwd(), "tests", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
  headers: Record<string, string>;
}

export interface MockRoute {
  status?: number;
  body: unknown;
}

function normalizeHeaders(init?: RequestInit): Record<string, string> {
  const out: Record<string, string> = {};
  const headers = init?.headers;
  if (headers === undefined) {
    return out;
  }
  for (const [key, value] of Object.entries(
      headers as Record<string, string>)) {
    out[key.toLowerCase()] = value;
  }
  return out;
}

function decodeBody(init?: RequestInit): unknown {
  const body = init?.body;
  if (body === undefined || body === null) {
    return null;
  }
  if (typeof body === "string") {
    try {
      return JSON.parse(body);
    } catch {
      return body;
    }
  }
  if (body instanceof ArrayBuffer) {
    return `bytes:${body.byteLength}`;
  }
  return String(body);
}

/**
 * Fetch stand-in keyed by "METHOD /path". A route value may be a list,
 * consumed in order with the last entry repeating. Unrouted requests
 * answer 404 so a test never silently talks past its table.
 */
export function mockFetch(
  routes: Record<string, MockRoute | MockRoute[]>,
  log: RecordedCall[] = [],
): FetchLike {
  const queues = new Map<string, MockRoute[]>();
  for (const [key, value] of Object.entries(routes)) {
    queues.set(key, Array.isArray(value) ? [...value] : [value]);
  }
  return async (url, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(url).pathname;
    log.push({
      method,
      path,
      body: decodeBody(init),
      headers: normalizeHeaders(init),
    });
    const queue = queues.get(`${method} ${path}`);
    const route = queue === undefined
      ? undefined
      : (queue.length > 1 ? queue.shift() : queue[0]);
    if (route === undefined) {
      return new Response(
        JSON.stringify({
          code: "no-mock-route",
          message: `no mock for ${method} ${path}`,
          detail: null,
        }),
        { status: 404, headers: { "content-type": "application/json" } });
    }
    return new Response(JSON.stringify(route.body), {
      status: route.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
}

const NUMBER_TOKEN = /-?\d+(?:\.\d+)?/g;

/**
 * Every numeric value reachable in a payload: numbers themselves plus
 * numeric tokens embedded in strings (service notes spell measurements
 * inside sentences).
 */
export function collectNumbers(
  value: unknown,
  into: Set<number> = new Set(),
): Set<number> {
  if (typeof value === "number") {
    into.add(value);
  } else if (typeof value === "string") {
    for (const token of value.match(NUMBER_TOKEN) ?? []) {
      into.add(Number(token));
    }
  } else if (Array.isArray(value)) {
    for (const item of value) {
      collectNumbers(item, into);
    }
  } else if (value !== null && typeof value === "object") {
    for (const item of Object.values(value)) {
      collectNumbers(item, into);
    }
  }
  return into;
}

/** Numeric tokens in rendered text, as numbers. */
export function numericTokens(text: string): number[] {
  return (text.match(NUMBER_TOKEN) ?? []).map(Number);
}

/**
 * Numeric tokens the user can actually see in a rendered tree,
 * tokenized per text node so adjacent table cells never fuse into a
 * number nobody displayed.
 */
export function visibleTokens(node: Node): number[] {
  if (node.nodeType === 3) {
    return numericTokens(node.nodeValue ?? "");
  }
  const tokens: number[] = [];
  for (const child of Array.from(node.childNodes)) {
    tokens.push(...visibleTokens(child));
  }
  return tokens;
}
