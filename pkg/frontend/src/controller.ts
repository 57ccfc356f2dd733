/** Async actions tying the client to state transitions, no DOM involved. */

import { ApiError, Client } from "./api.js";
import {
  applyError,
  applyRankings,
  beginMutation,
  finishMutation,
  recordSignal,
  validRatio,
  type ViewState,
} from "./state.js";

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

/** One poll cycle: refresh rankings, downgrade failures to a banner. */
export async function pollOnce(client: Client, state: ViewState): Promise<ViewState> {
  try {
    return applyRankings(state, await client.getRankings());
  } catch (err) {
    return applyError(state, describe(err));
  }
}

export async function deploySensor(
  client: Client,
  state: ViewState,
  sensor: string,
): Promise<ViewState> {
  const begun = beginMutation(state);
  if (begun === null) return state;
  try {
    return finishMutation(applyRankings(begun, await client.deploy(sensor)));
  } catch (err) {
    return finishMutation(applyError(begun, describe(err)));
  }
}

export async function sendSignal(
  client: Client,
  state: ViewState,
  sensor: string,
  signal: boolean,
): Promise<ViewState> {
  const begun = beginMutation(state);
  if (begun === null) return state;
  try {
    const response = await client.signal(sensor, signal);
    const event = {
      sensor: response.sensor,
      signal: response.signal,
      recommendedAction: response.recommended_action,
      at: new Date().toISOString(),
    };
    return finishMutation(recordSignal(begun, event));
  } catch (err) {
    return finishMutation(applyError(begun, describe(err)));
  }
}

/** Read-only by contract: slider moves must never mutate the session. */
export async function fetchSweep(client: Client, ratio: number) {
  if (!validRatio(ratio)) {
    throw new Error(`ratio must be a positive number, got ${ratio}`);
  }
  return client.getSweep([ratio]);
}

export async function resetSession(client: Client, state: ViewState): Promise<ViewState> {
  const begun = beginMutation(state);
  if (begun === null) return state;
  try {
    return finishMutation(applyRankings(begun, await client.reset()));
  } catch (err) {
    return finishMutation(applyError(begun, describe(err)));
  }
}
