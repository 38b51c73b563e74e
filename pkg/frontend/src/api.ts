/**
 * Thin client for the engine's /api/v1 endpoints. The fetch implementation
 * is injectable so tests can run against a recorded mock, and every search
 * accepts an AbortSignal so an edited query cancels the in-flight request.
 */

import type {
  AugmentationSpecJson,
  DatasetProfileJson,
  ErrorEnvelopeJson,
  QueryJson,
  SearchResponseJson,
  ServiceConfigJson,
  StatsJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public envelope: ErrorEnvelopeJson,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let envelope: ErrorEnvelopeJson = {
    code: `HTTP${response.status}`,
    message: response.statusText,
    details: {},
  };
  try {
    const doc = await response.json();
    if (doc && typeof doc.code === "string") {
      envelope = doc as ErrorEnvelopeJson;
    }
  } catch {
    // non-JSON error body: keep the status-based envelope
  }
  return new ApiError(response.status, envelope);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  private async json<T>(response: Response): Promise<T> {
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async search(
    query: QueryJson,
    relatedFile: File | Blob | null = null,
    signal?: AbortSignal,
  ): Promise<SearchResponseJson> {
    let response: Response;
    if (relatedFile !== null) {
      const form = new FormData();
      form.append("query", JSON.stringify(query));
      form.append("related_file", relatedFile, "related.csv");
      response = await this.fetchFn(this.url("/search"), {
        method: "POST",
        body: form,
        signal,
      });
    } else {
      response = await this.fetchFn(this.url("/search"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(query),
        signal,
      });
    }
    return this.json<SearchResponseJson>(response);
  }

  async upload(
    file: File | Blob,
    metadata: Record<string, unknown>,
  ): Promise<{ id: string; profile: DatasetProfileJson }> {
    const form = new FormData();
    form.append("file", file, "upload.csv");
    form.append("metadata", JSON.stringify(metadata));
    const response = await this.fetchFn(this.url("/upload"), {
      method: "POST",
      body: form,
    });
    return this.json(response);
  }

  /** Returns the augmented CSV plus its provenance header. */
  async augment(
    leftId: string | null,
    rightId: string,
    spec: AugmentationSpecJson,
    leftFile: File | Blob | null = null,
  ): Promise<{ csv: string; provenance: Record<string, unknown> }> {
    let response: Response;
    if (leftFile !== null) {
      const form = new FormData();
      form.append("left_file", leftFile, "left.csv");
      form.append("right_id", rightId);
      form.append("spec", JSON.stringify(spec));
      response = await this.fetchFn(this.url("/augment"), { method: "POST", body: form });
    } else {
      response = await this.fetchFn(this.url("/augment"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ left_id: leftId, right_id: rightId, spec }),
      });
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    const provenanceHeader = response.headers.get("X-Augmentation-Provenance");
    return {
      csv: await response.text(),
      provenance: provenanceHeader ? JSON.parse(provenanceHeader) : {},
    };
  }

  async dataset(id: string): Promise<DatasetProfileJson> {
    return this.json(await this.fetchFn(this.url(`/datasets/${encodeURIComponent(id)}`)));
  }

  downloadUrl(id: string): string {
    return this.url(`/datasets/${encodeURIComponent(id)}/download`);
  }

  async stats(): Promise<StatsJson> {
    return this.json(await this.fetchFn(this.url("/stats")));
  }

  async config(): Promise<ServiceConfigJson> {
    return this.json(await this.fetchFn(this.url("/config")));
  }

  async area(name: string): Promise<{ name: string; box: [number, number][] }> {
    return this.json(await this.fetchFn(this.url(`/areas/${encodeURIComponent(name)}`)));
  }
}
