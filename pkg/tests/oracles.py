"""Independent brute-force references for the GLCM statistics.

Plain nested loops over Python lists; nothing here touches numpy or the
package under test.
"""

import math


def naive_glcm(rows, levels, dx, dy):
    height, width = len(rows), len(rows[0])
    counts = [[0] * levels for _ in range(levels)]
    for r in range(height):
        for c in range(width):
            if r + dy < height and c + dx < width:
                counts[rows[r][c]][rows[r + dy][c + dx]] += 1
    return counts


def naive_normalize(counts):
    total = sum(sum(row) for row in counts)
    return [[v / total for v in row] for row in counts]


def naive_stats(h):
    n = len(h)
    eng = ent = idm = con = 0.0
    for i in range(n):
        for j in range(n):
            v = h[i][j]
            eng += v * v
            if v > 0:
                ent -= v * v * math.log(v)
            idm += v / (1 + (i - j) ** 2)
            con += (i - j) ** 2 * v * v
    return {"energy": eng, "entropy": ent, "inverse_variance": idm, "contrast": con}


def naive_feature_vector(rows, levels):
    out = []
    for dx, dy in ((1, 0), (0, 1), (2, 0), (1, 1)):
        s = naive_stats(naive_normalize(naive_glcm(rows, levels, dx, dy)))
        out += [s["energy"], s["contrast"], -s["entropy"], s["inverse_variance"]]
    return out


RAMP7 = [[(r + c) % 4 for c in range(7)] for r in range(7)]
