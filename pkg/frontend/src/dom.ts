/** DOM builders with provenance tagging.
 *
 * Every piece of data rendered as text carries a `data-prov` attribute
 * naming the API response field it came from ("GET /runs/x/report
 * #reports.cv.folds[0].scores.r2"). Values arithmetically derived from
 * API fields list their sources behind a `derived:` prefix. UI chrome
 * is written without digits so a missing tag is detectable by scanning
 * text nodes.
 */

type Attrs = Record<string, string | boolean | EventListener>;
type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key, value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function fmtNumber(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined) return "n/a";
  if (Number.isInteger(value)) return String(value);
  const text = value.toPrecision(digits);
  // strip trailing zeros without touching exponent notation
  return text.includes("e") ? text : String(Number(text));
}

/** A number from an API response, tagged with where it came from. */
export function num(
  value: number | null | undefined,
  prov: string,
  digits = 4,
): HTMLSpanElement {
  return el("span", { class: "num", "data-prov": prov }, fmtNumber(value, digits));
}

/** A non-numeric API value (names may contain digits, so tag them too). */
export function datum(text: string, prov: string): HTMLSpanElement {
  return el("span", { "data-prov": prov }, text);
}

/** A value echoed from the user's own draft rather than the server. */
export function draftValue(text: string, path: string): HTMLSpanElement {
  return el("span", { "data-prov": `draft#${path}` }, text);
}

export function clear(node: HTMLElement): HTMLElement {
  node.textContent = "";
  return node;
}
