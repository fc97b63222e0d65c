import { ApiClient } from "./api.js";
import { Session } from "./session.js";
import { renderChips, renderError, renderRegion, renderResultCard } from "./ui.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const api = new ApiClient(
  (document.querySelector("meta[name=api-base]") as HTMLMetaElement | null)?.content ?? "",
);
let session: Session | null = null;

async function upload(): Promise<void> {
  const pick = (id: string) => (el<HTMLInputElement>(id).files ?? [])[0];
  const design = pick("file-design");
  const photo = pick("file-photo");
  const annotations = pick("file-annotations");
  const status = el<HTMLElement>("upload-status");
  if (!design || !photo || !annotations) {
    status.textContent = "choose all three bundle files first";
    return;
  }
  try {
    const id = await api.uploadDesign({ design, photo, annotations });
    session = new Session(api, id);
    const meta = await api.designMeta(id);
    status.textContent = `design ${id}: ${meta.elements.length} elements`;
    el<HTMLImageElement>("design-preview").src = api.assetUrl(meta.design_ref);
    el<HTMLElement>("workspace").hidden = false;
  } catch (err) {
    status.replaceChildren(renderError(err));
  }
}

function renderHistory(): void {
  if (!session) return;
  const list = el<HTMLElement>("history");
  list.replaceChildren(
    ...session.history.map((entry) => {
      const li = document.createElement("li");
      li.textContent =
        `${entry.instruction} -> ${entry.resultRefs.length} result(s)` +
        (entry.baseRef ? ` (on ${entry.baseRef.slice(0, 8)})` : "");
      return li;
    }),
  );
}

async function submit(): Promise<void> {
  if (!session) return;
  const text = el<HTMLInputElement>("instruction").value.trim();
  if (!text) return;
  const errBox = el<HTMLElement>("errors");
  errBox.replaceChildren();
  try {
    const resp = await session.submitInstruction(text);
    el<HTMLElement>("chips").replaceChildren(renderChips(resp.source_colors));
    const meta = await api.designMeta(session.designId);
    el<HTMLElement>("regions").replaceChildren(
      ...resp.regions.map((r) => renderRegion(api, meta.photo_ref, r)),
    );
    el<HTMLElement>("grid").replaceChildren(
      ...resp.results.map((entry) =>
        renderResultCard(api, entry, (ref) => {
          session?.previewChoice(ref);
          session?.confirmChoice();
          el<HTMLElement>("base-note").textContent = `iterating on ${ref.slice(0, 8)}`;
        }),
      ),
    );
    renderHistory();
  } catch (err) {
    errBox.replaceChildren(renderError(err));
  }
}

el<HTMLButtonElement>("upload-btn").addEventListener("click", () => void upload());
el<HTMLButtonElement>("submit-btn").addEventListener("click", () => void submit());
el<HTMLInputElement>("instruction").addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") void submit();
});
