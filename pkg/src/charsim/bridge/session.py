"""The steering session: one sim loop, one client, a latest-wins mailbox.

The network reader thread never touches the environment; it only deposits
the most recent ControlInput (or a verb flag) into the mailbox, and the
60 Hz sim loop picks it up at the top of each control step.
"""

import logging
import socket
import threading
import time

import numpy as np

from charsim.dynamics import CONTROL_DT
from charsim.env import USER_INPUT, compute_reward
from charsim.learn import layout_signature, policy_forward, sample_pre_squash
from charsim.motion import ControlInput

from .protocol import (
    ProtocolError,
    make_error,
    make_frame_message,
    make_hello,
    parse_client_message,
    serialize,
)
from .ws import WebSocketError, WSConnection, server_handshake

log = logging.getLogger("charsim.bridge")

# fall this far behind real time and the pacing clock resyncs instead of
# sprinting to catch up
RESYNC_SLACK = 0.25


class Mailbox:
    """Single-slot, latest-wins; the reader overwrites, the loop reads."""

    def __init__(self, initial: ControlInput):
        self._lock = threading.Lock()
        self._value = initial

    def put(self, value: ControlInput) -> None:
        with self._lock:
            self._value = value

    def latest(self) -> ControlInput:
        with self._lock:
            return self._value


class MailboxStream:
    """Env command source that replays whatever the mailbox holds."""

    def __init__(self, mailbox: Mailbox):
        self.mailbox = mailbox

    @property
    def current(self) -> ControlInput:
        return self.mailbox.latest()

    def step(self, dt: float) -> ControlInput:
        return self.mailbox.latest()


class SteeringServer:
    """Serves one client at a time; between clients the simulation idles."""

    def __init__(self, params, rc, host: str = "127.0.0.1", port: int = 8765,
                 make_env=None, deterministic: bool = True):
        from charsim.cli.config import load_assets
        from charsim.cli.config import make_env as default_make_env

        if rc.task != USER_INPUT:
            raise ValueError(f"serving needs a user_input config, got {rc.task!r}")
        self.rc = rc
        self.model, clips = load_assets(rc)
        builder = make_env or default_make_env
        self.env = builder(rc, self.model, clips, rc.seed)
        expected = layout_signature(self.model.name, self.env.layout)
        if params.layout_signature and params.layout_signature != expected:
            raise ValueError(
                f"checkpoint layout {params.layout_signature!r} does not match "
                f"this config ({expected!r})")
        # user-task layouts are identical across action modes, so the
        # signature alone cannot catch a wrong-mode checkpoint
        if params.act_dim != self.env.action_dim:
            raise ValueError(
                f"checkpoint action dim {params.act_dim} does not match "
                f"this config ({self.env.action_dim})")
        self.params = params
        self.params.normalizer.frozen = True
        self.deterministic = deterministic
        self.mailbox = Mailbox(ControlInput())
        self.env.command_source = MailboxStream(self.mailbox)
        self._rng = np.random.default_rng(rc.seed)
        self._paused = False
        self._reset_requested = False
        self._shutdown = False

        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self.host, self.port = self._listener.getsockname()[:2]

    # ------------------------------------------------------------- serve

    def serve_forever(self) -> None:
        self._listener.settimeout(0.2)
        while not self._shutdown:
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                rest = server_handshake(sock)
            except (WebSocketError, OSError) as e:
                log.warning("rejected connection from %s: %s", addr, e)
                sock.close()
                continue
            log.info("client %s connected", addr)
            conn = WSConnection(sock, server_side=True, initial=rest)
            try:
                self._run_client(conn)
            except WebSocketError as e:
                log.info("client %s dropped: %s", addr, e)
            finally:
                conn.close()
            log.info("session idle, waiting for a client")

    def shutdown(self) -> None:
        self._shutdown = True

    def close(self) -> None:
        self.shutdown()
        try:
            self._listener.close()
        except OSError:
            pass

    # ------------------------------------------------------ client session

    def _reader(self, conn: WSConnection) -> None:
        malformed = 0
        while conn.open and not self._shutdown:
            try:
                text = conn.recv_text()
            except (WebSocketError, OSError) as e:
                log.warning("reader stopped: %s", e)
                conn.open = False
                return
            if text is None:
                return
            try:
                kind, control = parse_client_message(text)
            except ProtocolError as e:
                # answer the first few, then drop silently so a malformed
                # flood cannot amplify into an error-frame flood
                malformed += 1
                if malformed <= 10:
                    log.warning("ignoring malformed message: %s", e)
                    try:
                        conn.send_text(serialize(make_error(str(e))))
                    except WebSocketError:
                        return
                continue
            if kind == "control":
                self.mailbox.put(control)
            elif kind == "pause":
                self._paused = True
            elif kind == "resume":
                self._paused = False
            elif kind == "reset":
                self._reset_requested = True

    def _run_client(self, conn: WSConnection) -> None:
        # each client gets a fresh session: idle control, new episode
        self.mailbox.put(ControlInput())
        self._paused = False
        self._reset_requested = False
        obs = self.env.reset()
        breakdown = None

        reader = threading.Thread(target=self._reader, args=(conn,), daemon=True)
        reader.start()
        conn.send_text(serialize(make_hello(self.model, self.rc.task)))

        frame = 0
        t0 = time.monotonic()
        try:
            while conn.open and not self._shutdown:
                events = {}
                if self._reset_requested:
                    self._reset_requested = False
                    obs = self.env.reset()
                    breakdown = None
                    events["reset"] = True
                if self._paused:
                    events["paused"] = True
                else:
                    mean, log_std, _ = policy_forward(self.params, obs)
                    u = mean if self.deterministic else \
                        sample_pre_squash(mean, log_std, self._rng)
                    obs, breakdown, done, info = self.env.step(np.tanh(u))
                    events["teleported"] = info.get("teleported", False)
                    if done:
                        events["fell"] = info.get("reason") == "fall"
                        events["reset"] = True
                        obs = self.env.reset()
                if breakdown is None:
                    breakdown = compute_reward(
                        self.model, self.env.state, self.env.reference,
                        self.env.reward_weights, self.env.reward_scales,
                        self.env.angmom_reward)
                conn.send_text(serialize(
                    make_frame_message(frame, self.env, breakdown, events)))
                frame += 1
                deadline = t0 + frame * CONTROL_DT
                now = time.monotonic()
                if deadline - now > 0:
                    time.sleep(deadline - now)
                elif now - deadline > RESYNC_SLACK:
                    t0 = now - frame * CONTROL_DT
        finally:
            conn.open = False
            reader.join(timeout=2.0)


def run_session(params, rc, port: int = 8765, host: str = "127.0.0.1") -> int:
    server = SteeringServer(params, rc, host=host, port=port)
    print(f"serving {server.model.name} on ws://{server.host}:{server.port} "
          f"(ctrl-c stops)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("stopping")
    finally:
        server.close()
    return 0
