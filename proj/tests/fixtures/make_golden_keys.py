#!/usr/bin/env python3
# Copyright 2026 The fleetmon Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes golden_keys.txt from a standalone re-implementation of the key layout.

Each line is `metric|k=v,k=v|timestamp_s|n_salt_buckets|row_bucket_s|hex`.
Ids are assigned in order of first appearance, one namespace each for
metrics, tag names and tag values, starting at 1, while walking the lines
top to bottom (tags in name order).
"""

import sys

MASK = (1 << 64) - 1


def fmix64(k):
    k ^= k >> 33
    k = (k * 0xFF51AFD7ED558CCD) & MASK
    k ^= k >> 33
    k = (k * 0xC4CEB9FE1A85EC53) & MASK
    k ^= k >> 33
    return k


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


class Ids:
    def __init__(self):
        self.tables = ({}, {}, {})

    def get(self, kind, name):
        t = self.tables[kind]
        if name not in t:
            t[name] = len(t) + 1
        return t[name]


def encode(ids, metric, tags, ts, n_buckets, row_bucket):
    series = ids.get(0, metric).to_bytes(3, "big")
    for k, v in sorted(tags):
        series += ids.get(1, k).to_bytes(3, "big") + ids.get(2, v).to_bytes(3, "big")
    salt = 0 if n_buckets <= 1 else fmix64(fnv1a64(series)) % n_buckets
    base = ts - ts % row_bucket
    return bytes([salt]) + series[:3] + base.to_bytes(4, "big") + series[3:]


CASES = [
    ("energy", [("unit", "0"), ("sensor", "0")], 0, 16, 3600),
    ("energy", [("unit", "0"), ("sensor", "1")], 3599, 16, 3600),
    ("energy", [("unit", "0"), ("sensor", "1")], 3600, 16, 3600),
    ("energy", [("unit", "1"), ("sensor", "0")], 1700000000, 16, 3600),
    ("energy", [("sensor", "7"), ("unit", "12")], 4294967295, 16, 3600),
    ("energy", [("unit", "3"), ("sensor", "4")], 86400, 1, 3600),
    ("energy", [("unit", "3"), ("sensor", "4")], 86400, 256, 3600),
    ("energy", [("unit", "3"), ("sensor", "4")], 86461, 64, 60),
    ("anomaly", [("method", "bh"), ("unit", "0"), ("sensor", "0")], 179, 16, 3600),
    ("anomaly", [("method", "by"), ("unit", "0"), ("sensor", "0")], 179, 16, 3600),
    ("anomaly.rank", [("method", "bh"), ("unit", "0"), ("sensor", "0")], 179, 16, 3600),
    ("temperature", [], 1234567, 16, 3600),
    ("temperature", [("site", "north")], 1234567, 16, 3600),
    ("sys.cpu.user", [("host", "web01"), ("cpu", "0")], 1356998400, 16, 3600),
    ("sys.cpu.user", [("host", "web02"), ("cpu", "0")], 1356998400, 16, 3600),
    ("sys.cpu.user", [("host", "web01"), ("cpu", "1")], 1356998400, 8, 3600),
    ("energy", [("unit", "0"), ("sensor", "0")], 7200, 2, 3600),
    ("energy", [("unit", "999"), ("sensor", "999")], 7200, 16, 3600),
    ("energy", [("unit", "ünit-ß"), ("sensor", "0")], 10, 16, 3600),
    ("energy", [("zone", "a"), ("unit", "0"), ("sensor", "0"), ("a", "z")], 36000, 16, 3600),
]


def main(out):
    ids = Ids()
    for metric, tags, ts, n_buckets, row_bucket in CASES:
        key = encode(ids, metric, tags, ts, n_buckets, row_bucket)
        tag_text = ",".join(f"{k}={v}" for k, v in tags)
        out.write(f"{metric}|{tag_text}|{ts}|{n_buckets}|{row_bucket}|{key.hex()}\n")


if __name__ == "__main__":
    main(sys.stdout)
