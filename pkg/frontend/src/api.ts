/** Thin typed client for the /v1 API. The fetch function is injectable so
 * contract tests can replay recorded responses without a network. */

import type {
  HealthResponse,
  StationsResponse,
  WhatIfRequest,
  WhatIfResponse,
} from './types.js'

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail)
  }
}

async function raise(kind: string, res: { status: number; json(): Promise<unknown> }): Promise<never> {
  let code = 'error'
  let detail = `${kind} failed with HTTP ${res.status}`
  try {
    const body = (await res.json()) as { error?: string; detail?: string }
    if (body.error) code = body.error
    if (body.detail) detail = body.detail
  } catch {
    /* non-JSON error body; keep the generic detail */
  }
  throw new ApiError(res.status, code, detail)
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path)
    if (res.status !== 200) await raise(`GET ${path}`, res)
    return (await res.json()) as T
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })
    if (res.status !== 200) await raise(`POST ${path}`, res)
    return (await res.json()) as T
  }

  health(): Promise<HealthResponse> {
    return this.get('/v1/health')
  }

  stations(): Promise<StationsResponse> {
    return this.get('/v1/stations')
  }

  whatif(req: WhatIfRequest): Promise<WhatIfResponse> {
    return this.post('/v1/whatif', req)
  }
}
