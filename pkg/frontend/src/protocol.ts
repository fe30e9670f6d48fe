/**
 * Wire messages for a live steering session, protocol version 1.
 *
 * Every message is one JSON object in one websocket text frame. The hello
 * message opens the session and fixes the link order that every pose block
 * uses afterwards. Decoding validates the whole message before returning,
 * so a caller never sees a half-shaped frame.
 */

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // [w, x, y, z]

export interface Capsule {
  p0: Vec3;
  p1: Vec3;
  radius: number;
}

export interface HelloMessage {
  type: "hello";
  protocol: number;
  character: string;
  task: string;
  links: string[];
  capsules: (Capsule | null)[]; // index-aligned with links; null renders nothing
  dt: number;
}

export interface PoseBlock {
  pos: Vec3[];
  quat: Quat[];
}

export interface RewardBreakdown {
  pose: number;
  velocity: number;
  com: number;
  angmom: number;
  total: number;
}

export interface FrameEvents {
  teleported: boolean;
  fell: boolean;
  reset: boolean;
  paused: boolean;
}

export interface FrameMessage {
  type: "frame";
  frame: number;
  phase: number;
  control: [number, number]; // [direction, power] as applied
  reward: RewardBreakdown;
  events: FrameEvents;
  sim: PoseBlock | null; // null only on a diverged step
  ref: PoseBlock;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = HelloMessage | FrameMessage | ErrorMessage;

function isNum(v: unknown): v is number {
  return typeof v === "number";
}

function isVec(v: unknown, n: number): boolean {
  return Array.isArray(v) && v.length === n && v.every(isNum);
}

function checkPose(v: unknown, links: number): PoseBlock | null {
  if (typeof v !== "object" || v === null) return null;
  const pos = (v as Record<string, unknown>).pos;
  const quat = (v as Record<string, unknown>).quat;
  if (!Array.isArray(pos) || !Array.isArray(quat)) return null;
  if (pos.length !== links || quat.length !== links) return null;
  if (!pos.every((p) => isVec(p, 3)) || !quat.every((q) => isVec(q, 4))) return null;
  return v as PoseBlock;
}

function checkHello(doc: Record<string, unknown>): HelloMessage | null {
  if (!isNum(doc.protocol)) return null;
  if (typeof doc.character !== "string" || typeof doc.task !== "string") return null;
  const links = doc.links;
  const capsules = doc.capsules;
  if (!Array.isArray(links) || !links.every((l) => typeof l === "string")) return null;
  if (!Array.isArray(capsules) || capsules.length !== links.length) return null;
  for (const c of capsules) {
    if (c === null) continue;
    if (typeof c !== "object") return null;
    const cc = c as Record<string, unknown>;
    if (!isVec(cc.p0, 3) || !isVec(cc.p1, 3) || !isNum(cc.radius)) return null;
  }
  if (!isNum(doc.dt) || doc.dt <= 0) return null;
  return doc as unknown as HelloMessage;
}

function checkFrame(doc: Record<string, unknown>): FrameMessage | null {
  if (!isNum(doc.frame) || !isNum(doc.phase)) return null;
  if (!isVec(doc.control, 2)) return null;
  const reward = doc.reward as Record<string, unknown> | null;
  if (typeof reward !== "object" || reward === null) return null;
  for (const k of ["pose", "velocity", "com", "angmom", "total"]) {
    if (!isNum(reward[k])) return null;
  }
  const events = doc.events as Record<string, unknown> | null;
  if (typeof events !== "object" || events === null) return null;
  for (const k of ["teleported", "fell", "reset", "paused"]) {
    if (typeof events[k] !== "boolean") return null;
  }
  const ref = checkPose(doc.ref, Array.isArray((doc.ref as PoseBlock)?.pos)
    ? (doc.ref as PoseBlock).pos.length : -1);
  if (ref === null || ref.pos.length === 0) return null;
  if (doc.sim !== null && checkPose(doc.sim, ref.pos.length) === null) return null;
  return doc as unknown as FrameMessage;
}

/**
 * Parse and validate one server message; null for anything malformed.
 *
 * The sim and ref blocks of a frame must agree on link count; whether that
 * count matches the session's hello is the scene's check, not ours.
 */
export function decodeServerMessage(text: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) return null;
  const rec = doc as Record<string, unknown>;
  switch (rec.type) {
    case "hello":
      return checkHello(rec);
    case "frame":
      return checkFrame(rec);
    case "error":
      return typeof rec.message === "string" ? (rec as unknown as ErrorMessage) : null;
    default:
      return null;
  }
}

// key order in the literals below is the canonical (sorted) order the
// server uses for its own messages
export function encodeControl(direction: number, power: number): string {
  return JSON.stringify({ direction, power, type: "control" });
}

export type Verb = "pause" | "resume" | "reset";

export function encodeVerb(verb: Verb): string {
  return JSON.stringify({ type: verb });
}
