"""
Decoding with the spatial attention module
==========================================

Seeded random weights stand in for a trained recognizer. The output
text is meaningless, but shapes, attention maps and the greedy/beam
relationship are all real.
"""

import numpy as np

from textspot import (
    SamConfig,
    attention_step,
    beam_decode,
    encode_features,
    greedy_decode,
    initial_state,
    random_weights,
)

cfg = SamConfig(in_channels=32)
weights = random_weights(cfg, seed=3)
feat = np.random.default_rng(0).normal(size=(32, 14, 60))

F = encode_features(feat, weights)
print("encoded feature map:", F.shape)

# one step by hand; alpha is a distribution over the 8x32 grid
probs, state, alpha = attention_step(F, initial_state(cfg), weights)
print("attention sums to", alpha.sum(), "peak at", np.unravel_index(alpha.argmax(), alpha.shape))
print("most likely first class:", int(probs.argmax()), "p =", round(float(probs.max()), 4))

# sharpen the output and embedding layers and nudge EOS up a little so
# decoding stops after a few characters
bias = weights["out.b_o"] * 10
bias[0] += 1.0
sharp = weights.replace({"out.W_o": weights["out.W_o"] * 10, "out.b_o": bias,
                         "embed.W_y": weights["embed.W_y"] * 10})
g = greedy_decode(F, sharp, encoded=True)
b1 = beam_decode(F, sharp, k=1, encoded=True)
b6 = beam_decode(F, sharp, k=6, encoded=True)
print("greedy :", repr(g.text), g.tokens)
print("beam 1 :", repr(b1.text), b1.tokens)
print("beam 6 :", repr(b6.text), b6.tokens)


# beam search keeps six hypotheses and can settle on a sequence the
# step-by-step argmax never reaches


def seq_logp(d):
    return sum(np.log(row[t]) for row, t in zip(d.step_probs, d.tokens))


print("sequence log p: greedy", round(seq_logp(g), 3), " beam 6", round(seq_logp(b6), 3))
