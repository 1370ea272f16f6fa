import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import type { StationsResponse, WhatIfRequest, WhatIfResponse } from '../src/types.js'

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), 'fixtures')

export function fixtureText(name: string): string {
  return readFileSync(join(FIXTURES, name), 'utf8')
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixtureText(name)) as T
}

export interface RecordedWhatIf {
  request: WhatIfRequest
  response: WhatIfResponse
}

export const SCENARIOS = ['urban', 'intermediate', 'rural'] as const

export function recordedScenario(name: (typeof SCENARIOS)[number]): RecordedWhatIf {
  return fixtureJson<RecordedWhatIf>(`whatif_${name}.json`)
}

export function recordedStations(): StationsResponse {
  return fixtureJson<StationsResponse>('stations.json')
}

export class MemoryStorage {
  private readonly data = new Map<string, string>()

  getItem(key: string): string | null {
    return this.data.get(key) ?? null
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value)
  }
}
