import { describe, expect, it } from 'vitest'

import { MAX_PINS, restorePins, SessionState } from '../src/state.js'
import { MemoryStorage, recordedScenario, SCENARIOS } from './helpers.js'

function responseFor(name: (typeof SCENARIOS)[number]) {
  return recordedScenario(name).response
}

describe('candidate lifecycle', () => {
  it('keeps at most one active candidate', () => {
    const s = new SessionState()
    s.placeCandidate({ x_m: 1, y_m: 2 })
    s.placeCandidate({ x_m: 3, y_m: 4 })
    expect(s.candidate).toEqual({ x_m: 3, y_m: 4 })
    expect(s.lastResponse).toBeNull()
  })

  it('latest-wins: stale responses are dropped', () => {
    const s = new SessionState()
    const t1 = s.placeCandidate({ x_m: 1, y_m: 2 })
    const t2 = s.beginRequest() // slider moved before the reply arrived
    expect(s.acceptResponse(t1, responseFor('urban'))).toBe(false)
    expect(s.lastResponse).toBeNull()
    expect(s.acceptResponse(t2, responseFor('rural'))).toBe(true)
    expect(s.lastResponse?.neighborhood_3km).toEqual(
      responseFor('rural').neighborhood_3km,
    )
  })

  it('placing a new candidate invalidates in-flight requests', () => {
    const s = new SessionState()
    const t1 = s.placeCandidate({ x_m: 1, y_m: 2 })
    s.placeCandidate({ x_m: 9, y_m: 9 })
    expect(s.acceptResponse(t1, responseFor('urban'))).toBe(false)
  })
})

describe('scenario pinning', () => {
  function stateWithResponse(name: (typeof SCENARIOS)[number], storage?: MemoryStorage) {
    const s = new SessionState(storage)
    const t = s.placeCandidate({ x_m: 0, y_m: 0 })
    s.acceptResponse(t, responseFor(name))
    return s
  }

  it('three-scenario pin flow holds all three recorded responses', () => {
    const storage = new MemoryStorage()
    const s = new SessionState(storage)
    for (const name of SCENARIOS) {
      const t = s.beginRequest()
      s.acceptResponse(t, responseFor(name))
      expect(s.pin(name)).not.toBeNull()
    }
    expect(s.pins.map((p) => p.label)).toEqual([...SCENARIOS])
    s.pins.forEach((p, i) => {
      expect(p.response.curves).toEqual(responseFor(SCENARIOS[i]).curves)
    })
  })

  it('pinned scenarios are immutable', () => {
    const s = stateWithResponse('urban')
    const pin = s.pin('urban')!
    expect(Object.isFrozen(pin)).toBe(true)
    expect(Object.isFrozen(pin.response)).toBe(true)
    expect(Object.isFrozen(pin.response.curves[0])).toBe(true)
    expect(() => {
      ;(pin.response.curves[0].demand_trips_per_month as number[])[0] = 999
    }).toThrow()
  })

  it('caps at ten pins', () => {
    const s = stateWithResponse('urban')
    for (let i = 0; i < MAX_PINS; i++) {
      expect(s.pin(`p${i}`)).not.toBeNull()
    }
    expect(s.pin('overflow')).toBeNull()
    expect(s.pins.length).toBe(MAX_PINS)
  })

  it('pins persist through storage and restore on construction', () => {
    const storage = new MemoryStorage()
    const s = stateWithResponse('intermediate', storage)
    s.pin('kept')
    const reloaded = new SessionState(storage)
    expect(reloaded.pins.length).toBe(1)
    expect(reloaded.pins[0].label).toBe('kept')
    expect(reloaded.pins[0].response.curves).toEqual(
      responseFor('intermediate').curves,
    )
  })

  it('restorePins tolerates corrupt storage', () => {
    const storage = new MemoryStorage()
    storage.setItem('geodemand.pins.v1', '{nonsense')
    expect(restorePins(storage)).toEqual([])
  })

  it('unpin removes only the chosen scenario', () => {
    const s = stateWithResponse('urban', new MemoryStorage())
    s.pin('a')
    s.pin('b')
    s.unpin(0)
    expect(s.pins.map((p) => p.label)).toEqual(['b'])
  })
})
