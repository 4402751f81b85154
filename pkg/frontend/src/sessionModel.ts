// Pure session model: UI state is a function of (initial state, ordered
// frame history). Replaying a recorded frame log reproduces exactly the
// same chat history and duck-state trace, which is what the tests pin down.

import type { ServerFrame } from "./protocol.js";

export type ConnectionState = "idle" | "connecting" | "open" | "closed" | "error";

export interface ChatEntry {
  seq: number;
  author: string; // agent id or "you"
  text: string;
  kind: "user" | "agent";
  convId: string | null;
  roundIndex: number | null;
  presented: boolean; // final-round turn staged for playback
  hasAudio: boolean;
}

export interface ConversationSummary {
  convId: string;
  scenarioKind: string;
  roundsTotal: number;
  ended: boolean;
  finalOverall: number | null;
}

export interface DuckChange {
  seq: number;
  duck: boolean;
}

export interface SessionModelState {
  connection: ConnectionState;
  sessionId: string | null;
  roster: string[];
  history: ChatEntry[]; // always ordered by seq
  duck: boolean;
  duckTrace: DuckChange[];
  conversations: ConversationSummary[];
  showRefinements: boolean; // debug toggle; refinement rounds hidden by default
  lastError: string | null;
}

export function initialState(): SessionModelState {
  return {
    connection: "idle",
    sessionId: null,
    roster: [],
    history: [],
    duck: false,
    duckTrace: [],
    conversations: [],
    showRefinements: false,
    lastError: null,
  };
}

function insertBySeq(history: ChatEntry[], entry: ChatEntry): ChatEntry[] {
  const next = history.slice();
  let i = next.length;
  while (i > 0 && next[i - 1].seq > entry.seq) i--;
  next.splice(i, 0, entry);
  return next;
}

export function applyFrame(state: SessionModelState, frame: ServerFrame): SessionModelState {
  switch (frame.kind) {
    case "session_created":
      return { ...state, sessionId: frame.session_id, roster: frame.roster };
    case "user_message":
      return {
        ...state,
        history: insertBySeq(state.history, {
          seq: frame.seq,
          author: "you",
          text: frame.text,
          kind: "user",
          convId: null,
          roundIndex: null,
          presented: true,
          hasAudio: false,
        }),
      };
    case "agent_turn":
      return {
        ...state,
        history: insertBySeq(state.history, {
          seq: frame.seq,
          author: frame.agent_id,
          text: frame.text,
          kind: "agent",
          convId: frame.conv_id,
          roundIndex: frame.round_index,
          presented: frame.presented,
          hasAudio: frame.audio_b64 !== null || frame.audio_ref !== null,
        }),
      };
    case "duck_on":
    case "duck_off": {
      const duck = frame.kind === "duck_on";
      return { ...state, duck, duckTrace: [...state.duckTrace, { seq: frame.seq, duck }] };
    }
    case "conversation_started":
      return {
        ...state,
        conversations: [
          ...state.conversations,
          {
            convId: frame.conv_id,
            scenarioKind: frame.scenario.kind,
            roundsTotal: frame.scenario.rounds_total,
            ended: false,
            finalOverall: null,
          },
        ],
      };
    case "conversation_ended":
      return {
        ...state,
        conversations: state.conversations.map((c) =>
          c.convId === frame.conv_id ? { ...c, ended: true, finalOverall: frame.final_overall } : c,
        ),
      };
    case "evaluation_report":
      return state; // reports are transcript metadata, not rendered in chat
    case "error":
      return { ...state, lastError: frame.message };
    default:
      return state;
  }
}

export function replay(frames: ServerFrame[], base?: SessionModelState): SessionModelState {
  let state = base ?? initialState();
  for (const frame of frames) state = applyFrame(state, frame);
  return state;
}

export function setConnection(state: SessionModelState, connection: ConnectionState): SessionModelState {
  return { ...state, connection };
}

export function toggleRefinements(state: SessionModelState): SessionModelState {
  return { ...state, showRefinements: !state.showRefinements };
}

/** Chat entries the viewer should see: user messages plus presented agent
 * turns; refinement rounds only when the debug toggle is on. */
export function visibleHistory(state: SessionModelState): ChatEntry[] {
  return state.history.filter(
    (e) => e.kind === "user" || e.presented || state.showRefinements,
  );
}
