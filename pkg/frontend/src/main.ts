// Bootstrap: wire the controller to the DOM. The service base URL comes
// from the ?api= query parameter, defaulting to same-origin.

import { createApi } from "./api.js";
import { ChatController } from "./controller.js";
import { bindElements, render } from "./render.js";

export function setup(doc: Document, baseUrl: string): ChatController {
  const api = createApi(baseUrl);
  const controller = new ChatController(api);
  const view = bindElements(doc);
  const handlers = {
    onLike: (itemId: string) => void controller.markLiked(itemId),
    onDismissBanner: () => controller.dismissBanner(),
  };

  controller.subscribe((state) => render(view, state, handlers));

  const send = () => {
    const text = view.input.value;
    view.input.value = "";
    void controller.sendTurn(text);
  };
  view.sendButton.addEventListener("click", send);
  view.input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") {
      event.preventDefault();
      send();
    }
  });
  view.input.addEventListener("input", () =>
    render(view, controller.getState(), handlers),
  );
  view.userSelectToggle.addEventListener("change", () =>
    void controller.setUserSelect(view.userSelectToggle.checked),
  );
  view.kSelect.addEventListener("change", () =>
    void controller.setK(Number(view.kSelect.value)),
  );

  void controller.start();
  return controller;
}

declare global {
  interface Window {
    convrecController?: ChatController;
  }
}

if (typeof document !== "undefined" && document.getElementById("transcript")) {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "";
  window.convrecController = setup(document, baseUrl);
}
