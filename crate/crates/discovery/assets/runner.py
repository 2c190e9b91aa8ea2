"""Runs a generated optimizer class against the harness over stdin/stdout.

usage: runner.py CANDIDATE.py CLASS_NAME
"""
import importlib.util
import json
import random
import sys

try:
    import numpy as np
except ImportError:
    np = None

PROTOCOL_OUT = sys.stdout
# Anything the candidate prints goes to stderr so it cannot corrupt the protocol stream.
sys.stdout = sys.stderr


def send(msg):
    PROTOCOL_OUT.write(json.dumps(msg) + "\n")
    PROTOCOL_OUT.flush()


def receive():
    line = sys.stdin.readline()
    if not line:
        sys.exit("harness closed the channel")
    return json.loads(line)


class Bounds:
    def __init__(self, lb, ub):
        self.lb = np.array(lb, dtype=float) if np is not None else list(lb)
        self.ub = np.array(ub, dtype=float) if np is not None else list(ub)


class Func:
    def __init__(self, init):
        self.bounds = Bounds(init["lb"], init["ub"])
        self.dim = init["dim"]
        self.budget = init["budget"]
        self.remaining = init["budget"]

    def __call__(self, x):
        send({"type": "ask", "x": [float(v) for v in x]})
        reply = receive()
        if reply.get("type") != "tell":
            sys.exit("unexpected harness message: %r" % (reply,))
        self.remaining = reply["remaining"]
        return reply["fitness"]


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    path, class_name = sys.argv[1], sys.argv[2]
    init = receive()
    if init.get("type") != "init":
        sys.exit("expected init message")
    random.seed(init["seed"])
    if np is not None:
        np.random.seed(init["seed"] % (2**32))

    spec = importlib.util.spec_from_file_location("candidate", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    algorithm = getattr(module, class_name)(budget=init["budget"], dim=init["dim"])
    algorithm(Func(init))
    send({"type": "done"})


if __name__ == "__main__":
    main()
