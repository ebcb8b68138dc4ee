/**
 * Word-level diff used to highlight how an attempt changed from the
 * previous one. Classic LCS; attempt texts are short, so O(n*m) is fine.
 */

export interface DiffSpan {
  text: string;
  kind: "same" | "added" | "removed";
}

function tokenize(text: string): string[] {
  return text.split(/(\s+)/).filter((t) => t.length > 0);
}

export function diffWords(previous: string, next: string): DiffSpan[] {
  const a = tokenize(previous);
  const b = tokenize(next);
  const rows = a.length + 1;
  const cols = b.length + 1;
  const lcs: number[][] = Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      lcs[i][j] = a[i] === b[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const spans: DiffSpan[] = [];
  let i = 0;
  let j = 0;
  const push = (text: string, kind: DiffSpan["kind"]) => {
    const last = spans[spans.length - 1];
    if (last && last.kind === kind) {
      last.text += text;
    } else {
      spans.push({ text, kind });
    }
  };
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      push(a[i], "same");
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      push(a[i], "removed");
      i++;
    } else {
      push(b[j], "added");
      j++;
    }
  }
  while (i < a.length) push(a[i++], "removed");
  while (j < b.length) push(b[j++], "added");
  return spans;
}
