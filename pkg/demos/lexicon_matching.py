"""
Lexicon correction with weighted edit distance
==============================================

A recognizer unsure between "1" and "l" in the third position. Plain
edit distance cannot choose between two lexicon words; weighting the
edit costs by character probabilities can.
"""

from textspot import ALPHABET, DecodedText, Lexicon, edit_distance, match_lexicon, weighted_edit_distance
from textspot.lexicon import one_hot_probs

probs = one_hot_probs("he1lo")
probs[2] = 0.0
probs[2, ALPHABET.index("1")] = 0.45
probs[2, ALPHABET.index("l")] = 0.45
probs[2, ALPHABET.index("i")] = 0.10

for word in ("hello", "heilo"):
    print(f"{word}: plain {edit_distance('he1lo', word)}, "
          f"weighted {weighted_edit_distance('he1lo', probs, word):.2f}")

result = DecodedText("he1lo", [1, 1, 0.45, 1, 1], 0.89, "sam", char_probs=probs)
lex = Lexicon(["heilo", "hello", "help"])
print("plain pick   :", match_lexicon(result, None, lex))
print("weighted pick:", match_lexicon(result, None, lex, weighted=True))
