"""The command-line tool end to end, driven from Python.

Equivalent shell commands:

    mmtw synth tone -o tone.iq
    mmtw analyze tone.iq --out-dir out --block-size 100
    mmtw synth fsk -o fsk.iq --snr-db 20 --n-symbols 16
    mmtw fsk fsk.iq --symbol-rate 1.220703125e-4 -o bits.txt --center-freq 0.25
    mmtw crb --n-values 10,64,128
"""

import os
import tempfile

from mmtw.cli import main

with tempfile.TemporaryDirectory() as d:
    os.chdir(d)
    for argv in (
        ["synth", "tone", "-o", "tone.iq"],
        ["analyze", "tone.iq", "--out-dir", "out", "--block-size", "100"],
        ["synth", "fsk", "-o", "fsk.iq", "--snr-db", "20", "--n-symbols", "16"],
        ["fsk", "fsk.iq", "--symbol-rate", str(1 / 8192), "-o", "bits.txt", "--center-freq", "0.25"],
        ["crb", "--n-values", "10,64,128"],
    ):
        print("$ mmtw", " ".join(argv))
        main(argv)
        print()
    print("files:", sorted(os.listdir(".")), sorted(os.listdir("out")))
