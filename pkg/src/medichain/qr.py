"""QR Model 2 encoder (byte mode, EC level L, versions 1-10).

Record digests travel out-of-band as `ehr://<address>/<digest>` URIs
rendered into a scannable symbol: Reed-Solomon codewords over GF(2^8),
the standard mask penalty rules, ASCII-art and PBM output. Decoding is a
non-goal; tests check symbols against an independent decoder.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .hashing import check_hash32
from .keys import ADDRESS_LEN

URI_RE = re.compile(r"^ehr://([0-9a-f]{40})/([0-9a-f]{64})$")
PAYLOAD_LEN = 111  # 6 + 40 + 1 + 64

MIN_VERSION = 1
MAX_VERSION = 10

# Per version 1..10 at EC level L: (ec codewords per block, [(blocks, data codewords)]).
EC_BLOCKS_L = {
    1: (7, [(1, 19)]),
    2: (10, [(1, 34)]),
    3: (15, [(1, 55)]),
    4: (20, [(1, 80)]),
    5: (26, [(1, 108)]),
    6: (18, [(2, 68)]),
    7: (20, [(2, 78)]),
    8: (24, [(2, 97)]),
    9: (30, [(2, 116)]),
    10: (18, [(2, 68), (2, 69)]),
}

ALIGNMENT_CENTERS = {
    1: [],
    2: [6, 18],
    3: [6, 22],
    4: [6, 26],
    5: [6, 30],
    6: [6, 34],
    7: [6, 22, 38],
    8: [6, 24, 42],
    9: [6, 26, 46],
    10: [6, 28, 50],
}

FORMAT_MASK = 0x5412
FORMAT_POLY = 0x537  # BCH(15,5)
VERSION_POLY = 0x1F25  # BCH(18,6)
EC_LEVEL_L_BITS = 0b01

PENALTY_N1 = 3
PENALTY_N2 = 3
PENALTY_N3 = 40
PENALTY_N4 = 10


class PayloadTooLong(ValueError):
    pass


@dataclass(frozen=True)
class QrPayload:
    uri: str
    digest_kind: str = "record"  # or "merkle-root" for aggregated digests


@dataclass
class QrSymbol:
    version: int
    side: int
    mask: int
    modules: list[list[bool]]
    # Module coordinates of every interleaved codeword, placement order;
    # the first `data_codewords` entries are data, the rest error correction.
    codeword_modules: list[list[tuple[int, int]]] = field(repr=False, default_factory=list)
    data_codewords: int = 0


def make_payload(patient: bytes, digest: bytes, digest_kind: str = "record") -> QrPayload:
    """Canonical sharing URI for one record hash or a patient's Merkle root."""
    if len(patient) != ADDRESS_LEN:
        raise ValueError("patient address must be 20 bytes")
    check_hash32(digest, "digest")
    uri = f"ehr://{patient.hex()}/{digest.hex()}"
    assert len(uri) == PAYLOAD_LEN
    return QrPayload(uri=uri, digest_kind=digest_kind)


def parse_payload(uri: str) -> tuple[bytes, bytes]:
    match = URI_RE.match(uri)
    if not match:
        raise ValueError("not an ehr:// payload URI")
    return bytes.fromhex(match.group(1)), bytes.fromhex(match.group(2))


# --- GF(2^8) Reed-Solomon ---------------------------------------------------

def _build_gf_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 512
    log = [0] * 256
    value = 1
    for power in range(255):
        exp[power] = value
        log[value] = power
        value <<= 1
        if value & 0x100:
            value ^= 0x11D
    for power in range(255, 512):
        exp[power] = exp[power - 255]
    return exp, log

_GF_EXP, _GF_LOG = _build_gf_tables()


def _gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _GF_EXP[_GF_LOG[a] + _GF_LOG[b]]


def rs_generator(degree: int) -> list[int]:
    """Coefficients of prod (x - alpha^i), i in [0, degree)."""
    poly = [1]
    for i in range(degree):
        nxt = [0] * (len(poly) + 1)
        for j, coeff in enumerate(poly):
            nxt[j] ^= _gf_mul(coeff, _GF_EXP[i])
            nxt[j + 1] ^= coeff
        poly = nxt
    return poly


def rs_remainder(data: bytes, degree: int) -> bytes:
    """Reed-Solomon error-correction codewords for one block."""
    gen = rs_generator(degree)
    remainder = [0] * degree
    for byte in data:
        factor = byte ^ remainder[0]
        remainder = remainder[1:] + [0]
        if factor:
            log_f = _GF_LOG[factor]
            for i in range(degree):
                g = gen[degree - 1 - i]  # leading monic coefficient skipped
                if g:
                    remainder[i] ^= _GF_EXP[log_f + _GF_LOG[g]]
    return bytes(remainder)


# --- bitstream and codewords -------------------------------------------------

def _char_count_bits(version: int) -> int:
    return 16 if version >= 10 else 8


def byte_mode_capacity(version: int) -> int:
    """Max payload bytes a version-L symbol can carry in byte mode."""
    ec_per_block, groups = EC_BLOCKS_L[version]
    data_codewords = sum(count * per_block for count, per_block in groups)
    return (data_codewords * 8 - 4 - _char_count_bits(version)) // 8


def pick_version(length: int) -> int:
    for version in range(MIN_VERSION, MAX_VERSION + 1):
        if byte_mode_capacity(version) >= length:
            return version
    raise PayloadTooLong(
        f"{length} bytes exceeds version {MAX_VERSION}-L byte capacity"
    )


class _BitBuffer:
    def __init__(self):
        self.bits: list[int] = []

    def put(self, value: int, width: int) -> None:
        for shift in range(width - 1, -1, -1):
            self.bits.append((value >> shift) & 1)

    def to_bytes(self) -> bytes:
        out = bytearray()
        for i in range(0, len(self.bits), 8):
            byte = 0
            for bit in self.bits[i:i + 8]:
                byte = (byte << 1) | bit
            out.append(byte)
        return bytes(out)


def build_codewords(data: bytes, version: int) -> bytes:
    """Data bitstream -> padded data codewords -> block-interleaved sequence."""
    ec_per_block, groups = EC_BLOCKS_L[version]
    data_capacity = sum(count * per_block for count, per_block in groups)

    buf = _BitBuffer()
    buf.put(0b0100, 4)  # byte mode
    buf.put(len(data), _char_count_bits(version))
    for byte in data:
        buf.put(byte, 8)
    terminator = min(4, data_capacity * 8 - len(buf.bits))
    buf.put(0, terminator)
    while len(buf.bits) % 8:
        buf.bits.append(0)
    codewords = bytearray(buf.to_bytes())
    for pad in _pad_bytes():
        if len(codewords) >= data_capacity:
            break
        codewords.append(pad)

    blocks: list[bytes] = []
    offset = 0
    for count, per_block in groups:
        for _ in range(count):
            blocks.append(bytes(codewords[offset:offset + per_block]))
            offset += per_block
    ec_blocks = [rs_remainder(block, ec_per_block) for block in blocks]

    interleaved = bytearray()
    for i in range(max(len(b) for b in blocks)):
        for block in blocks:
            if i < len(block):
                interleaved.append(block[i])
    for i in range(ec_per_block):
        for ec in ec_blocks:
            interleaved.append(ec[i])
    return bytes(interleaved)


def _pad_bytes():
    while True:
        yield 0xEC
        yield 0x11


# --- matrix construction ------------------------------------------------------

def _format_bits(mask: int) -> int:
    data = (EC_LEVEL_L_BITS << 3) | mask
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * FORMAT_POLY)
    return ((data << 10) | rem) ^ FORMAT_MASK


def _version_bits(version: int) -> int:
    rem = version
    for _ in range(12):
        rem = (rem << 1) ^ ((rem >> 11) * VERSION_POLY)
    return (version << 12) | rem


class _Matrix:
    """Square module grid plus a which-modules-are-functional mask."""

    def __init__(self, version: int):
        self.version = version
        self.side = 17 + 4 * version
        self.modules = [[False] * self.side for _ in range(self.side)]
        self.is_function = [[False] * self.side for _ in range(self.side)]

    def set_function(self, row: int, col: int, dark: bool) -> None:
        self.modules[row][col] = dark
        self.is_function[row][col] = True

    def draw_function_patterns(self) -> None:
        side = self.side
        for i in range(side):  # timing, overdrawn by finders below
            self.set_function(6, i, i % 2 == 0)
            self.set_function(i, 6, i % 2 == 0)
        for (crow, ccol) in ((3, 3), (3, side - 4), (side - 4, 3)):
            self._draw_finder(crow, ccol)
        centers = ALIGNMENT_CENTERS[self.version]
        for crow in centers:
            for ccol in centers:
                if (crow, ccol) in (
                    (centers[0], centers[0]),
                    (centers[0], centers[-1]),
                    (centers[-1], centers[0]),
                ):
                    continue  # overlaps a finder corner
                self._draw_alignment(crow, ccol)
        self.draw_format(0)  # reserve; rewritten once the mask is chosen
        if self.version >= 7:
            self._draw_version_info()

    def _draw_finder(self, crow: int, ccol: int) -> None:
        for dr in range(-4, 5):
            for dc in range(-4, 5):
                row, col = crow + dr, ccol + dc
                if 0 <= row < self.side and 0 <= col < self.side:
                    dist = max(abs(dr), abs(dc))
                    self.set_function(row, col, dist not in (2, 4))

    def _draw_alignment(self, crow: int, ccol: int) -> None:
        for dr in range(-2, 3):
            for dc in range(-2, 3):
                self.set_function(
                    crow + dr, ccol + dc, max(abs(dr), abs(dc)) != 1
                )

    def draw_format(self, mask: int) -> None:
        bits = _format_bits(mask)
        side = self.side

        def bit(i: int) -> bool:
            return (bits >> i) & 1 == 1

        for i in range(6):  # first copy, around the top-left finder
            self.set_function(i, 8, bit(i))
        self.set_function(7, 8, bit(6))
        self.set_function(8, 8, bit(7))
        self.set_function(8, 7, bit(8))
        for i in range(9, 15):
            self.set_function(8, 14 - i, bit(i))
        for i in range(8):  # second copy, split across the other finders
            self.set_function(8, side - 1 - i, bit(i))
        for i in range(8, 15):
            self.set_function(side - 15 + i, 8, bit(i))
        self.set_function(side - 8, 8, True)  # fixed dark module

    def _draw_version_info(self) -> None:
        bits = _version_bits(self.version)
        for i in range(18):
            dark = (bits >> i) & 1 == 1
            a = self.side - 11 + i % 3
            b = i // 3
            self.set_function(a, b, dark)
            self.set_function(b, a, dark)

    def place_codewords(self, sequence: bytes) -> list[list[tuple[int, int]]]:
        """Zigzag placement; returns the module coordinates per codeword."""
        positions: list[list[tuple[int, int]]] = [[] for _ in sequence]
        bit_index = 0
        total_bits = len(sequence) * 8
        right = self.side - 1
        while right >= 1:
            if right == 6:
                right -= 1
            upward = ((right + 1) & 2) == 0
            for step in range(self.side):
                row = self.side - 1 - step if upward else step
                for col in (right, right - 1):
                    if self.is_function[row][col]:
                        continue
                    if bit_index < total_bits:
                        byte = sequence[bit_index >> 3]
                        dark = (byte >> (7 - (bit_index & 7))) & 1 == 1
                        self.modules[row][col] = dark
                        positions[bit_index >> 3].append((row, col))
                        bit_index += 1
                    # else: remainder bits stay light (zero) before masking
            right -= 2
        return positions

    def apply_mask(self, mask: int) -> None:
        for row in range(self.side):
            for col in range(self.side):
                if not self.is_function[row][col] and _mask_bit(mask, row, col):
                    self.modules[row][col] = not self.modules[row][col]


def _mask_bit(mask: int, row: int, col: int) -> bool:
    if mask == 0:
        return (row + col) % 2 == 0
    if mask == 1:
        return row % 2 == 0
    if mask == 2:
        return col % 3 == 0
    if mask == 3:
        return (row + col) % 3 == 0
    if mask == 4:
        return (row // 2 + col // 3) % 2 == 0
    if mask == 5:
        return (row * col) % 2 + (row * col) % 3 == 0
    if mask == 6:
        return ((row * col) % 2 + (row * col) % 3) % 2 == 0
    if mask == 7:
        return ((row + col) % 2 + (row * col) % 3) % 2 == 0
    raise ValueError("mask index must be 0-7")


_FINDER_SEQ = (True, False, True, True, True, False, True)


def penalty_score(modules: list[list[bool]]) -> int:
    side = len(modules)
    score = 0
    lines = [modules[r] for r in range(side)]
    lines += [[modules[r][c] for r in range(side)] for c in range(side)]
    for line in lines:
        # rule 1: runs of five or more same-colored modules
        run_color, run_len = line[0], 1
        for value in line[1:]:
            if value == run_color:
                run_len += 1
            else:
                if run_len >= 5:
                    score += PENALTY_N1 + run_len - 5
                run_color, run_len = value, 1
        if run_len >= 5:
            score += PENALTY_N1 + run_len - 5
        # rule 3: finder-like 1:1:3:1:1 pattern flanked by four light modules
        for i in range(side - 10):
            window = tuple(line[i:i + 11])
            if (
                window[:4] == (False,) * 4 and window[4:] == _FINDER_SEQ
            ) or (
                window[:7] == _FINDER_SEQ and window[7:] == (False,) * 4
            ):
                score += PENALTY_N3
    # rule 2: 2x2 blocks of one color
    for row in range(side - 1):
        for col in range(side - 1):
            value = modules[row][col]
            if (
                value == modules[row][col + 1]
                and value == modules[row + 1][col]
                and value == modules[row + 1][col + 1]
            ):
                score += PENALTY_N2
    # rule 4: dark-module proportion
    dark = sum(row.count(True) for row in modules)
    total = side * side
    deviation = abs(dark * 100 - total * 50)  # in units of total/100
    score += (deviation // (5 * total)) * PENALTY_N4
    return score


def encode_qr(payload: QrPayload) -> QrSymbol:
    """Smallest-version L symbol for the payload, best-penalty mask."""
    data = payload.uri.encode("utf-8")
    version = pick_version(len(data))
    sequence = build_codewords(data, version)

    matrix = _Matrix(version)
    matrix.draw_function_patterns()
    positions = matrix.place_codewords(sequence)

    best_mask, best_score = 0, None
    for mask in range(8):
        matrix.apply_mask(mask)
        matrix.draw_format(mask)
        score = penalty_score(matrix.modules)
        if best_score is None or score < best_score:
            best_mask, best_score = mask, score
        matrix.apply_mask(mask)  # XOR toggles back off
    matrix.apply_mask(best_mask)
    matrix.draw_format(best_mask)

    ec_per_block, groups = EC_BLOCKS_L[version]
    data_count = sum(count * per_block for count, per_block in groups)
    return QrSymbol(
        version=version,
        side=matrix.side,
        mask=best_mask,
        modules=matrix.modules,
        codeword_modules=positions,
        data_codewords=data_count,
    )


def render_ascii(symbol: QrSymbol, quiet: int = 4) -> str:
    """Two characters per module, dark as ##, with a quiet border."""
    width = symbol.side + 2 * quiet
    blank = "  " * width
    lines = [blank] * quiet
    for row in symbol.modules:
        cells = "".join("##" if dark else "  " for dark in row)
        lines.append("  " * quiet + cells + "  " * quiet)
    lines += [blank] * quiet
    return "\n".join(lines)


def render_pbm(symbol: QrSymbol, quiet: int = 4, scale: int = 1) -> str:
    """Portable bitmap (P1) text, 1 = dark, including the quiet zone."""
    side = symbol.side
    width = (side + 2 * quiet) * scale
    rows = []
    for row in range(-quiet, side + quiet):
        bits = []
        for col in range(-quiet, side + quiet):
            inside = 0 <= row < side and 0 <= col < side
            dark = symbol.modules[row][col] if inside else False
            bits.extend(["1" if dark else "0"] * scale)
        line = " ".join(bits)
        rows.extend([line] * scale)
    return f"P1\n{width} {width}\n" + "\n".join(rows) + "\n"
