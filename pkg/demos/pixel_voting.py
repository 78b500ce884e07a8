"""
Reading characters off segmentation maps
========================================

Build a small 37-channel probability stack by hand and decode it by
pixel voting.
"""

import numpy as np

from textspot import ALPHABET, pixel_vote

# background everywhere to start with
stack = np.zeros((37, 10, 24))
stack[0] = 1.0


def paint(stack, rows, cols, char, p):
    k = ALPHABET.index(char) + 1
    region = (slice(None), slice(*rows), slice(*cols))
    stack[region] = (0.9 - p) / 35
    stack[0][rows[0]:rows[1], cols[0]:cols[1]] = 0.1
    stack[k][rows[0]:rows[1], cols[0]:cols[1]] = p


# painted right to left on purpose; reading order comes from geometry
paint(stack, (2, 8), (17, 21), "t", 0.85)
paint(stack, (3, 7), (10, 14), "x", 0.55)
paint(stack, (2, 8), (2, 6), "e", 0.9)

result = pixel_vote(stack)
print("text:", result.text)
print("per-character scores:", np.round(result.char_scores, 3))
print("confidence:", round(result.confidence, 4))

# lowering a region below the threshold makes it vanish
stack[0, 3:7, 10:14] = 0.8
stack[1:, 3:7, 10:14] *= 0.2 / stack[1:, 3:7, 10:14].sum(axis=0)
print("after hiding the middle region:", pixel_vote(stack).text)
