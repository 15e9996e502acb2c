// Run-console view-model: fold the progress-event stream into a render
// state, and extract the per-iteration selected-score series from an
// optimization trace for charting.

import type { PaceTrace, ProgressEvent } from './types.js';

export interface ConsoleState {
  phase: ProgressEvent['phase'] | null;
  completedCells: number;
  totalCells: number;
  percent: number; // 0..100, from backend counters only
  messages: string[];
  terminal: boolean;
  failed: boolean;
}

export function initialConsoleState(): ConsoleState {
  return {
    phase: null,
    completedCells: 0,
    totalCells: 0,
    percent: 0,
    messages: [],
    terminal: false,
    failed: false,
  };
}

export function reduceEvent(state: ConsoleState, event: ProgressEvent): ConsoleState {
  const totalCells = Math.max(state.totalCells, event.total_cells);
  const completedCells = Math.max(state.completedCells, event.completed_cells);
  const percent =
    event.phase === 'done'
      ? 100
      : totalCells > 0
        ? Math.floor((100 * completedCells) / totalCells)
        : 0;
  return {
    phase: event.phase,
    completedCells,
    totalCells,
    percent,
    messages: [...state.messages, `${event.phase}: ${event.message}`],
    terminal: event.phase === 'done' || event.phase === 'failed',
    failed: event.phase === 'failed',
  };
}

export function reduceAll(events: ProgressEvent[]): ConsoleState {
  return events.reduce(reduceEvent, initialConsoleState());
}

export function isTerminalEvent(event: ProgressEvent): boolean {
  return event.phase === 'done' || event.phase === 'failed';
}

/** Selected-prompt score after each iteration (non-decreasing by
 * construction of the optimizer; rendered as the console chart). */
export function paceScoreSeries(trace: PaceTrace): (number | null)[] {
  return trace.trace.map((entry) => entry.incumbent_score_after);
}

export function seriesIsNonDecreasing(series: (number | null)[]): boolean {
  let previous = -Infinity;
  for (const value of series) {
    if (value === null) continue;
    if (value < previous) return false;
    previous = value;
  }
  return true;
}
