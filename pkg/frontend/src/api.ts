/** Thin client for the motionbox generation service. */

import { EditorProject } from "./model.js";
import { exportTracks } from "./tracksio.js";

export interface ModelInfo {
  model_id: string;
  n: number;
  h: number;
  w: number;
  trained_steps: number;
}

export interface GenerateResult {
  frames: string[]; // base64 PNGs
  meta: { model_id: string; seed: number; n: number; h: number; w: number; elapsed_ms: number };
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ServiceClient {
  constructor(public baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        /* keep statusText */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; model_loaded: boolean }> {
    return this.request("/api/v1/health");
  }

  models(): Promise<ModelInfo[]> {
    return this.request("/api/v1/models");
  }

  async generate(
    project: EditorProject,
    seed: number,
    modelId: string | null,
  ): Promise<GenerateResult> {
    if (!project.contentImage) {
      throw new ApiError(400, "load a content reference image before generating");
    }
    const body = {
      mode: "controlled",
      content_image: project.contentImage.split(",")[1] ?? project.contentImage,
      tracks: exportTracks(project),
      seed,
      model_id: modelId,
    };
    return this.request("/api/v1/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
