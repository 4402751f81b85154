// Wire frames for the companioncast session stream. Every frame is one
// JSON object mirroring a session event; `seq` orders everything.

export interface SpatialCue {
  azimuth_deg: number;
  gain: number;
}

export interface ScenarioInfo {
  kind: string;
  intensity: string;
  rounds_total: number;
  max_messages_per_round: number;
}

export interface SessionCreatedFrame {
  kind: "session_created";
  seq: number;
  session_id: string;
  timeline_id: string;
  supported_team: "home" | "away";
  roster: string[];
}

export interface ConversationStartedFrame {
  kind: "conversation_started";
  seq: number;
  conv_id: string;
  trigger_t: number;
  scenario: ScenarioInfo;
}

export interface AgentTurnFrame {
  kind: "agent_turn";
  seq: number;
  conv_id: string;
  agent_id: string;
  text: string;
  round_index: number;
  turn_seq: number;
  t_video: number;
  presented: boolean;
  audio_b64: string | null;
  audio_ref: string | null;
  start_offset_s: number | null;
  duration_s: number | null;
  cue: SpatialCue | null;
}

export interface DuckFrame {
  kind: "duck_on" | "duck_off";
  seq: number;
  conv_id: string;
  at_offset_s: number;
}

export interface EvaluationReportFrame {
  kind: "evaluation_report";
  seq: number;
  conv_id: string;
  round_index: number;
  scores: Record<string, number>;
  overall: number;
  feedback: string;
  judged_by: "live" | "scripted" | "skipped";
}

export interface ConversationEndedFrame {
  kind: "conversation_ended";
  seq: number;
  conv_id: string;
  rounds_executed: number;
  turns_total: number;
  final_overall: number | null;
}

export interface UserMessageFrame {
  kind: "user_message";
  seq: number;
  text: string;
}

export interface ErrorFrame {
  kind: "error";
  seq?: number;
  message: string;
  conv_id?: string;
}

export type ServerFrame =
  | SessionCreatedFrame
  | ConversationStartedFrame
  | AgentTurnFrame
  | DuckFrame
  | EvaluationReportFrame
  | ConversationEndedFrame
  | UserMessageFrame
  | ErrorFrame;

export interface ClockSyncFrame {
  kind: "clock_sync";
  video_t: number;
}

export interface UserMessageOut {
  kind: "user_message";
  text: string;
}

export type ClientFrame = ClockSyncFrame | UserMessageOut;

export function parseServerFrame(raw: string): ServerFrame | null {
  let body: unknown;
  try {
    body = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof body !== "object" || body === null) return null;
  const kind = (body as { kind?: unknown }).kind;
  if (typeof kind !== "string") return null;
  return body as ServerFrame;
}
