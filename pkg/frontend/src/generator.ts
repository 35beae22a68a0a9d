// Deterministic prompt completion. If the prompt follows the RAG
// template (a Context block and a Question line), answer with the
// context sentence sharing the most terms with the question; otherwise
// echo the prompt. Either way the output is capped at maxTokens
// whitespace tokens, so callers get stable, bounded text.

const SENTENCE = /[^.!?\n]+[.!?]?/g;

function terms(text: string): Set<string> {
  const out = new Set<string>();
  for (const w of text.toLowerCase().split(/\s+/)) {
    const t = w.replace(/^[.,;:!?"'()]+|[.,;:!?"'()]+$/g, "");
    if (t) out.add(t);
  }
  return out;
}

export function generate(prompt: string, maxTokens: number): string {
  const ctxMatch = prompt.match(/Context:\n([\s\S]*?)\n\nQuestion: (.*)\nAnswer:/);
  let text: string;
  if (ctxMatch) {
    const [, context, question] = ctxMatch;
    const q = terms(question);
    let best = "";
    let bestScore = -1;
    for (const m of context.matchAll(SENTENCE)) {
      const sent = m[0].trim();
      if (!sent) continue;
      let score = 0;
      for (const t of terms(sent)) if (q.has(t)) score++;
      if (score > bestScore) {
        best = sent;
        bestScore = score;
      }
    }
    text = best;
  } else {
    text = prompt;
  }
  const tokens = text.split(/\s+/).filter(Boolean);
  return tokens.slice(0, maxTokens).join(" ");
}
