/**
 * Typed client for the tuning service HTTP API.
 *
 * Every pixel the UI shows comes from the /view/ endpoints of this
 * service; the client never decodes or recomputes image data.
 */

import type {
  HealthInfo,
  RightMeta,
  ServerState,
  SessionCreated,
  StepResult,
  WireParams,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field: string | null;

  constructor(status: number, code: string, message: string, field?: string | null) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.code = code;
    this.field = field ?? null;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = '', fetchFn?: FetchLike) {
    // Strip a trailing slash so path joins stay predictable
    this.base = base.replace(/\/$/, '');
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private url(path: string): string {
    return `${this.base}/api/v1${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  private json(method: string, body?: unknown): RequestInit {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { 'content-type': 'application/json' };
    }
    return init;
  }

  health(): Promise<HealthInfo> {
    return this.request('/health');
  }

  createSession(): Promise<SessionCreated> {
    return this.request('/session', this.json('POST'));
  }

  state(sid: string): Promise<ServerState> {
    return this.request(`/session/${sid}/state`);
  }

  patchParams(sid: string, changes: Partial<WireParams>): Promise<ServerState> {
    return this.request(`/session/${sid}/params`, this.json('PATCH', changes));
  }

  resetParams(sid: string): Promise<ServerState> {
    return this.request(`/session/${sid}/reset`, this.json('POST'));
  }

  step(sid: string, count = 1): Promise<StepResult> {
    return this.request(`/session/${sid}/step`, this.json('POST', { count }));
  }

  play(sid: string, fps?: number): Promise<ServerState> {
    return this.request(`/session/${sid}/play`, this.json('POST', fps === undefined ? {} : { fps }));
  }

  pause(sid: string): Promise<ServerState> {
    return this.request(`/session/${sid}/pause`, this.json('POST'));
  }

  rightMeta(sid: string): Promise<RightMeta> {
    return this.request(`/session/${sid}/view/right/meta`);
  }

  /** Fetch a view image as raw bytes (used by the contract tests). */
  async viewBytes(sid: string, pane: 'left' | 'right'): Promise<Uint8Array> {
    const response = await this.fetchFn(this.url(`/session/${sid}/view/${pane}`));
    if (!response.ok) {
      throw await toApiError(response);
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  /**
   * URL for an <img> element. The frame index and parameter version are
   * appended as a cache buster so the browser refetches exactly when the
   * server has something new.
   */
  viewUrl(sid: string, pane: 'left' | 'right', frame: number | null, version: number): string {
    return this.url(`/session/${sid}/view/${pane}?f=${frame ?? 'none'}&v=${version}`);
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = 'http_error';
  let message = `${response.status} ${response.statusText}`;
  let field: string | null = null;
  try {
    const body = await response.json();
    if (body && typeof body === 'object' && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      field = body.error.field ?? null;
    }
  } catch {
    // Non-JSON body: keep the HTTP status text
  }
  return new ApiError(response.status, code, message, field);
}
