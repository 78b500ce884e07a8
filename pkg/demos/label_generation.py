"""
Training targets for one proposal
=================================

A slanted word polygon with two annotated characters, mapped into a
128x32 target frame.
"""

import numpy as np

from textspot import CharBox, Polygon, Rect, generate_targets

word = Polygon([(12, 40), (118, 30), (120, 58), (14, 70)])
chars = [CharBox(11, Rect(14, 36, 40, 66)), CharBox(29, Rect(90, 32, 118, 60))]  # "a", "s"
proposal = Rect(10, 28, 122, 72)

t = generate_targets(word, chars, proposal)
print("instance map:", t.instance_map.shape, "covers", int(t.instance_map.sum()), "of", 128 * 32, "pixels")
codes, counts = np.unique(t.char_map, return_counts=True)
print("character map codes:", dict(zip(codes.astype(int).tolist(), counts.tolist())))

# without character boxes every pixel is ignored by the segmentation loss
t = generate_targets(word, None, proposal)
print("unannotated char map all -1:", bool(np.all(t.char_map == -1)))

# coarse look at the instance mask
for row in t.instance_map[0, ::4, ::4]:
    print("".join("#" if v else "." for v in row))
