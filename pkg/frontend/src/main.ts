/** App bootstrap: wires the editor, preview, service calls and file I/O. */

import { ApiError, ModelInfo, ServiceClient } from "./api.js";
import { TrackEditor } from "./editor.js";
import { EditorProject, newProject, removeKeyframe } from "./model.js";
import { FramePlayer } from "./player.js";
import { rasterizeProject } from "./raster.js";
import { exportTracksText, parseProject, serializeProject } from "./tracksio.js";

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const client = new ServiceClient(
  (window as any).MOTIONBOX_API ?? `${location.protocol}//${location.host}`,
);

let project: EditorProject = newProject(16, 64, 64);
let editor: TrackEditor;
let selectedModel: ModelInfo | null = null;
let inFlight = false;

function status(message: string, isError = false): void {
  const el = $("status");
  el.textContent = message;
  el.classList.toggle("error", isError);
}

function rebuildEditor(): void {
  const canvas = $("editor-canvas") as unknown as HTMLCanvasElement;
  editor = new TrackEditor(canvas, project);
  editor.trackCanvasListeners();
  editor.onChange = refreshSidebar;
  editor.setImage(project.contentImage);
  const scrub = $("frame-scrub") as unknown as HTMLInputElement;
  scrub.max = String(project.n - 1);
  scrub.value = "0";
  editor.setFrame(0);
  $("frame-label").textContent = `frame 1 / ${project.n}`;
  refreshSidebar();
}

function refreshSidebar(): void {
  const list = $("track-list");
  list.innerHTML = "";
  for (const t of project.tracks) {
    const li = document.createElement("li");
    const swatch = `<span class="swatch" style="background:${t.color}"></span>`;
    const kfs = t.keyframes.map((k) => k.frame).join(", ");
    li.innerHTML = `${swatch} track ${t.id} &middot; keyframes [${kfs}]`;
    const del = document.createElement("button");
    del.textContent = "drop keyframe";
    del.title = "remove the keyframe at the current frame";
    del.onclick = () => {
      if (!removeKeyframe(t, editor.currentFrame)) {
        status("tracks keep at least one keyframe; nothing removed at this frame", true);
      }
      editor.render();
      refreshSidebar();
    };
    li.appendChild(del);
    list.appendChild(li);
  }
  $("preview-btn").toggleAttribute("disabled", project.tracks.length === 0);
}

function previewMotion(): void {
  const frames = rasterizeProject(project);
  const canvases = frames.map((frame) => {
    const c = document.createElement("canvas");
    c.width = project.width;
    c.height = project.height;
    const ctx = c.getContext("2d")!;
    const img = ctx.createImageData(project.width, project.height);
    for (let i = 0; i < frame.length; i++) {
      const v = frame[i] ? 255 : 0;
      img.data[4 * i] = v;
      img.data[4 * i + 1] = v;
      img.data[4 * i + 2] = v;
      img.data[4 * i + 3] = 255;
    }
    ctx.putImageData(img, 0, 0);
    return c;
  });
  previewPlayer.setFramesCanvases(canvases);
  previewPlayer.play();
  status(`previewing ${frames.length} rasterized motion frames`);
}

async function submitGenerate(): Promise<void> {
  if (inFlight) {
    return;
  }
  if (!project.contentImage) {
    status("load a content reference image before generating", true);
    return;
  }
  if (project.tracks.length === 0) {
    status("no tracks drawn: the video will have no commanded objects", false);
  }
  const seed = Number(($("seed-input") as unknown as HTMLInputElement).value) || 0;
  inFlight = true;
  $("generate-btn").setAttribute("disabled", "");
  status("generating...");
  try {
    const result = await client.generate(project, seed, selectedModel?.model_id ?? null);
    // keep the previous result for side-by-side comparison
    const prevFrames = resultPlayer.frameCount;
    if (prevFrames > 0) {
      const prevCanvas = $("result-canvas") as unknown as HTMLCanvasElement;
      const snapshot = $("previous-canvas") as unknown as HTMLCanvasElement;
      snapshot.getContext("2d")!.drawImage(prevCanvas, 0, 0, snapshot.width, snapshot.height);
      $("previous-label").textContent = "previous result (frame shown at swap time)";
    }
    await resultPlayer.setFramesBase64(result.frames);
    resultPlayer.play();
    status(`generated ${result.frames.length} frames in ${result.meta.elapsed_ms} ms (seed ${result.meta.seed})`);
  } catch (err) {
    if (err instanceof ApiError) {
      status(`service rejected the request: ${err.detail}`, true);
    } else {
      status(`network failure: ${(err as Error).message} (check the service and retry)`, true);
    }
  } finally {
    inFlight = false;
    $("generate-btn").removeAttribute("disabled");
  }
}

function download(name: string, text: string): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

async function loadModels(): Promise<void> {
  const select = $("model-select") as unknown as HTMLSelectElement;
  try {
    const models = await client.models();
    select.innerHTML = "";
    for (const m of models) {
      const opt = document.createElement("option");
      opt.value = m.model_id;
      opt.textContent = `${m.model_id} (${m.n}x${m.h}x${m.w}, ${m.trained_steps} steps)`;
      select.appendChild(opt);
    }
    if (models.length > 0) {
      selectedModel = models[0];
      project = newProject(selectedModel.n, selectedModel.w, selectedModel.h);
      rebuildEditor();
      status(`loaded ${models.length} model(s); canvas set to ${selectedModel.n} frames`);
    } else {
      status("service reachable but no models are loaded; using default 16x64x64 canvas", true);
    }
    select.onchange = () => {
      selectedModel = models.find((m) => m.model_id === select.value) ?? null;
      if (selectedModel) {
        project = newProject(selectedModel.n, selectedModel.w, selectedModel.h);
        rebuildEditor();
      }
    };
  } catch (err) {
    status(`could not reach the service (${(err as Error).message}); editing offline`, true);
  }
}

let previewPlayer: FramePlayer;
let resultPlayer: FramePlayer;

window.addEventListener("DOMContentLoaded", () => {
  previewPlayer = new FramePlayer(
    $("preview-canvas") as unknown as HTMLCanvasElement,
    $("preview-scrub") as unknown as HTMLInputElement,
    $("preview-label"),
  );
  resultPlayer = new FramePlayer(
    $("result-canvas") as unknown as HTMLCanvasElement,
    $("result-scrub") as unknown as HTMLInputElement,
    $("result-label"),
  );
  rebuildEditor();
  loadModels();

  ($("frame-scrub") as unknown as HTMLInputElement).addEventListener("input", (e) => {
    const f = Number((e.target as HTMLInputElement).value);
    editor.setFrame(f);
    $("frame-label").textContent = `frame ${f + 1} / ${project.n}`;
  });

  ($("image-input") as unknown as HTMLInputElement).addEventListener("change", (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    const reader = new FileReader();
    reader.onload = () => {
      project.contentImage = String(reader.result);
      editor.setImage(project.contentImage);
      status("content reference image loaded; draw boxes over the objects on frame 1");
    };
    reader.readAsDataURL(file);
  });

  $("preview-btn").onclick = previewMotion;
  $("generate-btn").onclick = () => void submitGenerate();
  $("export-btn").onclick = () => download("tracks.json", exportTracksText(project));
  $("save-btn").onclick = () => download("project.json", serializeProject(project));
  $("preview-play").onclick = () => previewPlayer.toggle();
  $("result-play").onclick = () => resultPlayer.toggle();

  ($("project-input") as unknown as HTMLInputElement).addEventListener("change", (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    const reader = new FileReader();
    reader.onload = () => {
      try {
        project = parseProject(String(reader.result));
        rebuildEditor();
        editor.setImage(project.contentImage);
        status("project loaded");
      } catch (err) {
        status(`project file rejected: ${(err as Error).message}`, true);
      }
    };
    reader.readAsText(file);
  });
});
