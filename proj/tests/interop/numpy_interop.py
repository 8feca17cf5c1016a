#!/usr/bin/env python3
# Copyright 2026 The ckptleak Authors
# SPDX-License-Identifier: Apache-2.0
"""NPZ interoperability with numpy in both directions, driven through the CLI."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np


def run(tool, *args, expect=0):
    proc = subprocess.run([tool, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")
    return proc.stdout


def main():
    tool = sys.argv[1]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # Library-written NPZ read by numpy.
        run(tool, "mkmodel", "-o", str(tmp / "model.npz"), "--manifest", str(tmp / "arch.json"),
            "--bytes", "3MB", "--seed", "4")
        arch = json.loads((tmp / "arch.json").read_text())
        with np.load(tmp / "model.npz") as z:
            assert sorted(z.files) == sorted(e["key"] for e in arch["entries"]), z.files
            for e in arch["entries"]:
                a = z[e["key"]]
                assert a.dtype == np.float32, a.dtype
                assert list(a.shape) == e["shape"], (a.shape, e["shape"])
                assert 0.03 < float(a.std()) < 0.07

        # Hidden chunks stay ordinary uint8 arrays to numpy.
        payload = bytes(range(256)) * 40
        (tmp / "payload.bin").write_bytes(payload)
        run(tool, "embed", "--carrier", str(tmp / "model.npz"), "--payload", str(tmp / "payload.bin"),
            "-o", str(tmp / "export.npz"), "--chunk-size", "4KiB")
        with np.load(tmp / "export.npz") as z:
            chunks = sorted(k for k in z.files if k.startswith("__stash/chunk_"))
            assert len(chunks) == 3, chunks
            assert all(z[k].dtype == np.uint8 for k in chunks)
            assert b"".join(z[k].tobytes() for k in chunks) == payload

        # numpy-written NPZ read by the library, stored and deflated.
        rng = np.random.default_rng(0)
        arrays = {
            "conv.weight": rng.normal(0, 0.05, (16, 3, 3, 3)).astype("<f4"),
            "bn.running_mean": rng.normal(0, 1, 16).astype("<f8"),
            "step": np.array(12, dtype="<i8"),
            "flags": np.array([1, 0, 1], dtype="u1"),
        }
        for name, save in (("stored.npz", np.savez), ("deflated.npz", np.savez_compressed)):
            save(tmp / name, **arrays)
            report = json.loads(run(tool, "scan", "-i", str(tmp / name)))
            assert report["verdict"] == "Clean", report
            run(tool, "embed", "--carrier", str(tmp / name), "--payload", str(tmp / "payload.bin"),
                "-o", str(tmp / ("x" + name)), "--format", "wdc")
            run(tool, "extract", "-i", str(tmp / ("x" + name)), "-o", str(tmp / "back.bin"))
            assert (tmp / "back.bin").read_bytes() == payload
    print("numpy interop ok")


if __name__ == "__main__":
    main()
