"""Pure-python CRC32C (Castagnoli), slicing-by-8.

crc32c(b"123456789") == 0xE3069283.
"""

import numpy as np

_POLY = 0x82F63B78


def _build_tables(n=8):
    t = np.zeros((n, 256), dtype=np.uint64)
    for b in range(256):
        crc = b
        for _ in range(8):
            crc = (crc >> 1) ^ _POLY if crc & 1 else crc >> 1
        t[0, b] = crc
    for k in range(1, n):
        prev = t[k - 1]
        t[k] = (prev >> np.uint64(8)) ^ t[0][(prev & np.uint64(0xFF)).astype(np.int64)]
    return [row.astype(np.uint32).tolist() for row in t]


_T = _build_tables()


def crc32c(data: bytes, crc: int = 0) -> int:
    crc = ~crc & 0xFFFFFFFF
    n = len(data)
    head = n - (n % 8)
    if head:
        words = np.frombuffer(data[:head], dtype="<u4")
        lo = words[0::2].tolist()
        hi = words[1::2]
        b4 = (hi & 0xFF).tolist()
        b5 = ((hi >> 8) & 0xFF).tolist()
        b6 = ((hi >> 16) & 0xFF).tolist()
        b7 = (hi >> 24).tolist()
        t0, t1, t2, t3, t4, t5, t6, t7 = _T
        for j in range(len(lo)):
            c = crc ^ lo[j]
            crc = (
                t7[c & 0xFF]
                ^ t6[(c >> 8) & 0xFF]
                ^ t5[(c >> 16) & 0xFF]
                ^ t4[c >> 24]
                ^ t3[b4[j]]
                ^ t2[b5[j]]
                ^ t1[b6[j]]
                ^ t0[b7[j]]
            )
    table = _T[0]
    for b in data[head:]:
        crc = (crc >> 8) ^ table[(crc ^ b) & 0xFF]
    return ~crc & 0xFFFFFFFF
