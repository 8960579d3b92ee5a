"""Writes the hand-encoded IDX and PGM fixtures used by the unit tests."""
import os
import struct
import sys

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
os.makedirs(out, exist_ok=True)


def put(name, data):
    with open(os.path.join(out, name), "wb") as f:
        f.write(data)


put("image_2x2.idx3", struct.pack(">IIII", 0x803, 1, 2, 2) + bytes([0, 255, 128, 7]))
put("labels_3.idx1", struct.pack(">II", 0x801, 3) + bytes([5, 0, 4]))
put("bad_magic.idx3", struct.pack(">IIII", 0x804, 1, 2, 2) + bytes([0, 255, 128, 7]))
put("empty.idx3", b"")
put("truncated.idx3", struct.pack(">IIII", 0x803, 2, 2, 2) + bytes([0, 255, 128, 7, 9]))
put("label_10.idx1", struct.pack(">II", 0x801, 3) + bytes([5, 10, 4]))
put("golden_2x2.pgm", b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
