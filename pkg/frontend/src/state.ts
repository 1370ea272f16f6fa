/** Client session state: one active candidate, its latest what-if response,
 * and up to ten pinned scenarios for side-by-side comparison.
 *
 * The UI never computes model math; this store only holds service
 * responses. Concurrent what-if requests are deduplicated latest-wins:
 * stale responses are dropped by token. Pins survive reloads through an
 * injected storage (localStorage in the browser, a map in tests). */

import type { WhatIfResponse } from './types.js'

export interface Candidate {
  x_m: number
  y_m: number
}

export interface PinnedScenario {
  readonly label: string
  readonly response: WhatIfResponse
  readonly pinnedAt: number
}

export interface StorageLike {
  getItem(key: string): string | null
  setItem(key: string, value: string): void
}

export const MAX_PINS = 10
const PINS_KEY = 'geodemand.pins.v1'

export class SessionState {
  private candidate_: Candidate | null = null
  private lastResponse_: WhatIfResponse | null = null
  private pins_: PinnedScenario[] = []
  private requestToken = 0
  supplyMin = 1
  supplyMax = 20
  selectedModels: string[] = []

  constructor(private readonly storage?: StorageLike) {
    if (storage) this.pins_ = restorePins(storage)
  }

  get candidate(): Candidate | null {
    return this.candidate_
  }

  get lastResponse(): WhatIfResponse | null {
    return this.lastResponse_
  }

  get pins(): readonly PinnedScenario[] {
    return this.pins_
  }

  /** Placing a candidate replaces any previous one (at most one active)
   * and invalidates in-flight requests. Returns the request token the
   * eventual response must present. */
  placeCandidate(c: Candidate): number {
    this.candidate_ = { ...c }
    this.lastResponse_ = null
    return ++this.requestToken
  }

  /** Begin a new request for the current candidate (e.g. slider change). */
  beginRequest(): number {
    return ++this.requestToken
  }

  /** Accept a response only if it belongs to the newest request. */
  acceptResponse(token: number, response: WhatIfResponse): boolean {
    if (token !== this.requestToken) return false
    this.lastResponse_ = response
    return true
  }

  /** Pin the latest response; pinned scenarios are frozen and immutable. */
  pin(label: string): PinnedScenario | null {
    if (!this.lastResponse_ || this.pins_.length >= MAX_PINS) return null
    const scenario: PinnedScenario = Object.freeze({
      label,
      response: deepFreeze(structuredCloneCompat(this.lastResponse_)),
      pinnedAt: this.pins_.length,
    })
    this.pins_ = [...this.pins_, scenario]
    this.persist()
    return scenario
  }

  unpin(index: number): void {
    this.pins_ = this.pins_.filter((_, i) => i !== index)
    this.persist()
  }

  private persist(): void {
    if (this.storage) {
      this.storage.setItem(PINS_KEY, JSON.stringify(this.pins_))
    }
  }
}

export function restorePins(storage: StorageLike): PinnedScenario[] {
  const raw = storage.getItem(PINS_KEY)
  if (!raw) return []
  try {
    const parsed = JSON.parse(raw) as PinnedScenario[]
    return parsed.slice(0, MAX_PINS).map((p) => Object.freeze(deepFreeze(p)))
  } catch {
    return []
  }
}

function structuredCloneCompat<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T
}

function deepFreeze<T>(value: T): T {
  if (value && typeof value === 'object') {
    for (const key of Object.keys(value as object)) {
      deepFreeze((value as Record<string, unknown>)[key])
    }
    Object.freeze(value)
  }
  return value
}
