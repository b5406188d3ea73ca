#!/usr/bin/env python3
"""The volume filter and the checksum clearinghouse.

Shows the sliding-window volume filter flagging a noisy host, then the
personalization-evasion story: raw checksums miss a personalized burst
while fuzzy checksums collapse it back to one digest.
"""

import random

from spamlab.bulk import (
    ChecksumDB,
    VolumeWindow,
    body_checksum,
    checksum_classify,
    volume_classify,
)
from spamlab.corpus import Label, Message
from spamlab.trafficgen import personalize


def message(body, host="host0.client.example", to=("u@example.org",)):
    return Message(
        from_addr="a@b.c", to_addrs=tuple(to), cc_addrs=(), bcc_addrs=(),
        subject="", message_id="<x@y>", received_headers=(),
        body=body, truth=Label.SPAM, origin_host=host, step=0,
    )


print("volume filter: window 200 entries, threshold 20")
rng = random.Random(0)
window = VolumeWindow(window_size=200, threshold=20)
flagged = 0
for i in range(400):
    host = "relay0.open.example" if i % 3 == 0 else f"host{rng.randrange(40)}.client.example"
    verdict = volume_classify(window, message("x", host=host))
    if verdict.label is Label.SPAM:
        flagged += 1
        if flagged == 1:
            print(f"  first flag at position {i} (host {host})")
print(f"  {flagged} messages flagged; only the noisy relay exceeds the window share")

payload = "limited offer\nbuy cheap pills today"
burst = [personalize(payload, f"user{i}@example.org") for i in range(50)]

print("\nchecksum clearinghouse, threshold 5, burst of 50 personalized copies")
print("  two variants, raw digests:   ",
      body_checksum(burst[0], False), body_checksum(burst[1], False))
print("  two variants, fuzzy digests: ",
      body_checksum(burst[0], True), body_checksum(burst[1], True))

for fuzzy in (False, True):
    db = ChecksumDB(bulk_threshold=5)
    caught = sum(
        checksum_classify(db, message(body), fuzzy=fuzzy).label is Label.SPAM
        for body in burst
    )
    mode = "fuzzy" if fuzzy else "raw  "
    print(f"  {mode} checksums: {caught}/50 flagged as bulk")
