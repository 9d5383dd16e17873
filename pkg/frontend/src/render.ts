// DOM rendering: one render(state) pass over stable element references.
// Scores and ranks are printed exactly as the service sent them.

import type { UiState } from "./state.js";

export interface ViewElements {
  transcript: HTMLElement;
  items: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
  sendButton: HTMLButtonElement;
  input: HTMLInputElement | HTMLTextAreaElement;
  userSelectToggle: HTMLInputElement;
  kSelect: HTMLSelectElement;
}

export interface ViewHandlers {
  onLike(itemId: string): void;
  onDismissBanner(): void;
}

export function bindElements(root: Document | HTMLElement): ViewElements {
  const find = <T extends Element>(selector: string): T => {
    const el = root.querySelector(selector);
    if (!el) throw new Error(`missing element: ${selector}`);
    return el as T;
  };
  return {
    transcript: find<HTMLElement>("#transcript"),
    items: find<HTMLElement>("#items"),
    banner: find<HTMLElement>("#banner"),
    status: find<HTMLElement>("#status"),
    sendButton: find<HTMLButtonElement>("#send"),
    input: find<HTMLInputElement>("#input"),
    userSelectToggle: find<HTMLInputElement>("#user-select"),
    kSelect: find<HTMLSelectElement>("#k-select"),
  };
}

export function render(view: ViewElements, state: UiState, handlers: ViewHandlers): void {
  const doc = view.transcript.ownerDocument;

  view.transcript.replaceChildren(
    ...state.transcript.map((turn) => {
      const el = doc.createElement("div");
      el.className = `turn ${turn.role}`;
      el.textContent = turn.text;
      return el;
    }),
  );

  view.items.replaceChildren(
    ...state.items.map((item) => {
      const row = doc.createElement("div");
      row.className = "item";
      row.dataset["itemId"] = item.item_id;

      const rank = doc.createElement("span");
      rank.className = "rank";
      rank.textContent = String(item.rank);

      const title = doc.createElement("span");
      title.className = "title";
      title.textContent = item.title || item.item_id;

      const score = doc.createElement("span");
      score.className = "score";
      score.textContent = item.score.toFixed(4);

      const like = doc.createElement("button");
      like.className = "like";
      const alreadyLiked = state.liked.includes(item.item_id);
      like.textContent = alreadyLiked ? "liked" : "like";
      like.disabled = alreadyLiked;
      like.addEventListener("click", () => handlers.onLike(item.item_id));

      row.append(rank, title, score, like);
      return row;
    }),
  );

  view.banner.textContent = state.banner ?? "";
  view.banner.style.display = state.banner ? "block" : "none";
  if (state.banner) {
    const dismiss = doc.createElement("button");
    dismiss.textContent = "dismiss";
    dismiss.addEventListener("click", () => handlers.onDismissBanner());
    view.banner.append(" ", dismiss);
  }

  view.status.textContent = state.sessionId
    ? state.pending
      ? "thinking..."
      : `session ${state.sessionId.slice(0, 8)}`
    : "no session";

  view.userSelectToggle.checked = state.userSelect;
  view.kSelect.value = String(state.k);
  view.sendButton.disabled = !state.sessionId || view.input.value.trim() === "";
}
