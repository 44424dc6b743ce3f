"""Frozen development-mode constants.

Dev mode funds ten fixed identities (seeds 0x00..00 through 0x00..09) with
100 ether each, mirroring a local test middleware's ten prefunded
accounts. The hex literals below were computed once from those seeds and
are asserted by the regression tests; regenerating them means the key or
hashing scheme changed.
"""

from __future__ import annotations

from .state import WEI_PER_ETHER

DEV_ACCOUNT_COUNT = 10
DEV_FUNDING_WEI = 100 * WEI_PER_ETHER  # 100 ether each
DEV_TOTAL_SUPPLY_WEI = DEV_ACCOUNT_COUNT * DEV_FUNDING_WEI  # 10^21

DEV_SEEDS = [i.to_bytes(32, "big") for i in range(DEV_ACCOUNT_COUNT)]

# (public_key, address) per seed, frozen.
DEV_IDENTITIES = [
    ("3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29",
     "a0d741628fc826e09475d341a780acde3c4b8070"),
    ("4cb5abf6ad79fbf5abbccafcc269d85cd2651ed4b885b5869f241aedf0a5ba29",
     "28615344a89c49839a07f1f76887ad62d06a1f57"),
    ("7422b9887598068e32c4448a949adb290d0f4e35b9e01b0ee5f1a1e600fe2674",
     "3c8f0433f58072bdba21a8b277faa495b57bf7f3"),
    ("f381626e41e7027ea431bfe3009e94bdd25a746beec468948d6c3c7c5dc9a54b",
     "147bfd0708d7931a786c0d42ba9f5381a722998f"),
    ("fd50b8e3b144ea244fbf7737f550bc8dd0c2650bbc1aada833ca17ff8dbf329b",
     "e430c9e6cadfedf2f64e8ef3ff3d0c5ac4f06eb2"),
    ("fde4fba030ad002f7c2f7d4c331f49d13fb0ec747eceebec634f1ff4cbca9def",
     "7a56d3ef1086bbf2b2c128bc64625a4cef90c731"),
    ("b4c92afb3ba57f3ab959ffe6d319c98484a2155a0f4c65b2c37011ffd197b075",
     "546c62280007de30f6ae889e44575c2e539663e2"),
    ("3ee2a8a7283cb2fd728943daa127ef09e483071a8b4bc699ba4522f09b14cfde",
     "a3027fe90d876d39133af5de57faa03da004d1a6"),
    ("be3b4f95d1d875d71dd2facf6c5e4da57c1a2c79dead9e1fc5c3b5c1de54c022",
     "f0215eb787f5da1e5042f4b7aeb874b1392bbf77"),
    ("dd7e84d010aed28a416e928f50c4c09ac0f94a8f5b346548168bddb61cdb7263",
     "de6397ab843a105db8a013ea4cf33fbcb408ddd6"),
]

DEV_ADDRESSES = [bytes.fromhex(addr) for _, addr in DEV_IDENTITIES]

# Header hash of the fixed genesis block (empty, timestamp 0, nonce 0).
GENESIS_HEADER_HASH = (
    "a0bf83b3948dce6afe987c170a5cd711a3d65fcd5c70e3b7bbfeeb1578544609"
)


def dev_allocations() -> list[tuple[bytes, int]]:
    return [(addr, DEV_FUNDING_WEI) for addr in DEV_ADDRESSES]
