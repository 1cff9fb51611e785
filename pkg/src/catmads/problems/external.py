"""Blackboxes running in a separate process, spoken to over a line protocol.

Request: one point per line, in the canonical point encoding.
Reply: one line ``f g_1 ... g_J``; ``inf`` and ``nan`` are accepted tokens.
Anything else (wrong token count, unparsable text, no reply before the
timeout, a dead process) is recorded as a hidden failure.
"""

from __future__ import annotations

import logging
import os
import select
import shlex
import subprocess
import threading
from pathlib import Path
from typing import Optional, Sequence, Union

import yaml

from ..domain import Domain, Evaluation, Point, domain_from_dict, encode_point
from .base import Problem

logger = logging.getLogger(__name__)


class BlackboxStartError(RuntimeError):
    pass


class ProcessBlackbox:
    def __init__(self, command: Union[str, Sequence[str]], n_constraints: int, timeout: float = 60.0, cwd=None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.n_constraints = n_constraints
        self.timeout = timeout
        self.cwd = cwd
        self._lock = threading.Lock()
        self._proc: Optional[subprocess.Popen] = None
        self._start()

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                text=True, bufsize=1, cwd=self.cwd,
            )
        except OSError as exc:
            raise BlackboxStartError(f"cannot start {self.command!r}: {exc}") from exc

    def _alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def _readline(self) -> Optional[str]:
        ready, _, _ = select.select([self._proc.stdout], [], [], self.timeout)
        if not ready:
            return None
        line = self._proc.stdout.readline()
        return line if line else None

    def parse(self, line: Optional[str]) -> Evaluation:
        failure = Evaluation.failure(self.n_constraints)
        if line is None:
            return failure
        tokens = line.split()
        if len(tokens) != 1 + self.n_constraints:
            return failure
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            return failure
        return Evaluation.from_values(values[0], values[1:])

    def __call__(self, point: Point) -> Evaluation:
        with self._lock:
            if not self._alive():
                logger.warning("blackbox process is not running; restarting")
                self.close()
                self._start()
            try:
                self._proc.stdin.write(encode_point(point) + "\n")
                self._proc.stdin.flush()
                line = self._readline()
            except (BrokenPipeError, OSError, ValueError):
                line = None
            if line is None and self._alive():
                # a silent process would desynchronise later replies
                self.close()
            return self.parse(line)

    def close(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.terminate()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
        finally:
            if proc.stdout:
                proc.stdout.close()


def external_blackbox(command, domain: Domain, n_constraints: int, name: str = "external",
                      timeout: float = 60.0, cwd=None) -> Problem:
    bb = ProcessBlackbox(command, n_constraints, timeout=timeout, cwd=cwd)
    return Problem(name, domain, n_constraints, bb, meta={"close": bb.close, "command": bb.command})


def load_problem_file(path) -> Problem:
    """Build an external problem from a YAML definition file.

    Keys: ``name``, ``command`` (string or list), ``n_constraints``,
    ``variables`` (see the domain definition format), optional ``timeout``.
    Relative commands run from the file's directory.
    """
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if "command" not in data:
        raise ValueError(f"{path}: no 'command' key")
    domain = domain_from_dict(data)
    return external_blackbox(
        data["command"], domain, int(data.get("n_constraints", 0)),
        name=data.get("name", path.stem), timeout=float(data.get("timeout", 60.0)),
        cwd=os.fspath(path.parent.resolve()),
    )
