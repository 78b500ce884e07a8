"""Spatial attention decoder over a 2-D feature map.

The encoder resizes an RoI feature map, runs conv -> max-pool -> conv and
appends one-hot row/column channels. The decoder is a GRU that at every
step attends over all spatial locations, reads a glimpse, and emits a
distribution over 37 classes (EOS + 36 characters).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import expit, log_softmax

from .alphabet import EOS, NUM_CLASSES, DecodedText, class_to_char
from .tensor import as_tensor, bilinear_resize, conv2d, linear, maxpool2d, softmax

PARAM_NAMES = (
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "attn.W_t",
    "attn.W_s",
    "attn.W_f",
    "attn.b",
    "embed.W_y",
    "embed.b_y",
    "rnn.W_ih",
    "rnn.W_hh",
    "rnn.b_ih",
    "rnn.b_hh",
    "out.W_o",
    "out.b_o",
)


@dataclass(frozen=True)
class SamConfig:
    H_p: int = 8
    W_p: int = 32
    C: int = 256
    V: int = 256
    N_c: int = NUM_CLASSES
    T_max: int = 32
    beam_k: int = 6
    # not fixed by the model description; None means "same as C" / "same as V"
    in_channels: Optional[int] = None
    attn_dim: Optional[int] = None
    embed_dim: Optional[int] = None

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value is not None and value < 1:
                raise ValueError(f"SamConfig.{name} must be positive, got {value}")
        if self.N_c < 2:
            raise ValueError("N_c must be at least 2 (EOS plus one character)")

    @property
    def input_channels(self) -> int:
        return self.in_channels or self.C

    @property
    def attention_dim(self) -> int:
        return self.attn_dim or self.V

    @property
    def embedding_dim(self) -> int:
        return self.embed_dim or self.V

    @property
    def feature_channels(self) -> int:
        return self.C + self.H_p + self.W_p

    @property
    def input_size(self) -> tuple[int, int]:
        # one 2x2 max-pool between the two padded convolutions
        return (2 * self.H_p, 2 * self.W_p)

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def param_shapes(cfg: SamConfig) -> dict[str, tuple[int, ...]]:
    C, V, A, E, D = cfg.C, cfg.V, cfg.attention_dim, cfg.embedding_dim, cfg.feature_channels
    return {
        "conv1.weight": (C, cfg.input_channels, 3, 3),
        "conv1.bias": (C,),
        "conv2.weight": (C, C, 3, 3),
        "conv2.bias": (C,),
        "attn.W_t": (A,),
        "attn.W_s": (A, V),
        "attn.W_f": (A, D),
        "attn.b": (A,),
        "embed.W_y": (E, cfg.N_c),
        "embed.b_y": (E,),
        "rnn.W_ih": (3 * V, D + E),
        "rnn.W_hh": (3 * V, V),
        "rnn.b_ih": (3 * V,),
        "rnn.b_hh": (3 * V,),
        "out.W_o": (cfg.N_c, V),
        "out.b_o": (cfg.N_c,),
    }


@dataclass(frozen=True)
class SamWeights:
    cfg: SamConfig
    params: dict[str, np.ndarray]

    def __post_init__(self):
        expected = param_shapes(self.cfg)
        missing = set(expected) - set(self.params)
        if missing:
            raise ValueError(f"missing parameters: {sorted(missing)}")
        clean = {}
        for name, shape in expected.items():
            arr = as_tensor(self.params[name], name=name).copy()
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            clean[name] = arr
        object.__setattr__(self, "params", clean)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def replace(self, updates: dict[str, np.ndarray]) -> "SamWeights":
        return SamWeights(self.cfg, {**self.params, **updates})


@dataclass
class AttentionState:
    s: np.ndarray
    y_prev: int
    t: int = 0


@dataclass
class Hypothesis:
    tokens: tuple[int, ...]
    log_prob: float
    state: object  # AttentionState for SAM; None once finished
    finished: bool
    rows: tuple[np.ndarray, ...] = field(default=(), repr=False)


# --- random weights ------------------------------------------------------

LCG_A = 6364136223846793005
LCG_C = 1442695040888963407
_MASK64 = (1 << 64) - 1


@lru_cache(maxsize=1)
def _lcg_jump_tables(block: int = 1 << 14):
    # entry j advances the state by j + 1 draws: s_{n+j+1} = mult[j] * s_n + inc[j]
    mult, inc = [], []
    m, c = 1, 0
    for _ in range(block):
        m, c = (m * LCG_A) & _MASK64, (c * LCG_A + LCG_C) & _MASK64
        mult.append(m)
        inc.append(c)
    return np.array(mult, dtype=np.uint64), np.array(inc, dtype=np.uint64)


def lcg_uniform(seed: int, n: int, low: float = -0.1, high: float = 0.1, state: int | None = None):
    """``n`` uniforms from the 64-bit LCG ``s <- a*s + c mod 2**64``.

    Each draw advances the state once and uses its top 53 bits. Returns
    ``(values, final_state)`` so that draws can be chained.
    """
    s = (seed if state is None else state) & _MASK64
    mult, inc = _lcg_jump_tables()
    block = len(mult)
    out = np.empty(n, dtype=np.float64)
    done = 0
    while done < n:
        take = min(block, n - done)
        states = mult[:take] * np.uint64(s) + inc[:take]  # wraps mod 2**64
        out[done:done + take] = (states >> np.uint64(11)).astype(np.float64) * 2.0**-53
        s = int(states[take - 1])
        done += take
    return low + (high - low) * out, s


def random_weights(cfg: SamConfig, seed: int) -> SamWeights:
    """Seeded uniform weights in [-0.1, 0.1], filled in manifest order."""
    params, state = {}, None
    for name, shape in param_shapes(cfg).items():
        vals, state = lcg_uniform(seed, int(np.prod(shape)), state=state)
        params[name] = vals.reshape(shape)
    return SamWeights(cfg, params)


# --- model -----------------------------------------------------------------

def position_embedding(cfg: SamConfig) -> np.ndarray:
    """One-hot column channels followed by one-hot row channels, ``(W_p + H_p, H_p, W_p)``."""
    H, W = cfg.H_p, cfg.W_p
    pe = np.zeros((W + H, H, W))
    cols = np.arange(W)
    rows = np.arange(H)
    pe[cols[None, :], rows[:, None], cols[None, :]] = 1.0
    pe[W + rows[:, None], rows[:, None], cols[None, :]] = 1.0
    return pe


def encode_features(feat, weights: SamWeights, cfg: SamConfig | None = None) -> np.ndarray:
    cfg = cfg or weights.cfg
    feat = as_tensor(feat, ndim=3, name="feature map")
    if feat.shape[0] != cfg.input_channels:
        raise ValueError(
            f"feature map has {feat.shape[0]} channels, weights expect {cfg.input_channels}"
        )
    x = bilinear_resize(feat, *cfg.input_size)
    x = conv2d(x, weights["conv1.weight"], weights["conv1.bias"], stride=1, pad=1)
    x = maxpool2d(x, 2, 2)
    x = conv2d(x, weights["conv2.weight"], weights["conv2.bias"], stride=1, pad=1)
    return np.concatenate([x, position_embedding(cfg)], axis=0)


def initial_state(cfg: SamConfig) -> AttentionState:
    return AttentionState(s=np.zeros(cfg.V), y_prev=EOS, t=0)


def gru_cell(h: np.ndarray, x: np.ndarray, weights: SamWeights) -> np.ndarray:
    V = h.shape[0]
    gi = weights["rnn.W_ih"] @ x + weights["rnn.b_ih"]
    gh = weights["rnn.W_hh"] @ h + weights["rnn.b_hh"]
    r = expit(gi[:V] + gh[:V])
    z = expit(gi[V:2 * V] + gh[V:2 * V])
    n = np.tanh(gi[2 * V:] + r * gh[2 * V:])
    return (1.0 - z) * n + z * h


def glimpse(F: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Attention-weighted sum of ``F`` over its two spatial axes."""
    return F.reshape(F.shape[0], -1) @ alpha.ravel()


class _Context:
    """Per-feature-map quantities that do not change across decoding steps."""

    def __init__(self, F: np.ndarray, weights: SamWeights, cfg: SamConfig):
        D = cfg.feature_channels
        if F.shape != (D, cfg.H_p, cfg.W_p):
            raise ValueError(f"feature map shape {F.shape}, expected {(D, cfg.H_p, cfg.W_p)}")
        self.F = F
        self.F_flat = F.reshape(D, -1)
        # W_f F + b is shared by every step
        self.proj = weights["attn.W_f"] @ self.F_flat + weights["attn.b"][:, None]
        self.weights = weights
        self.cfg = cfg


def _step(ctx: _Context, state: AttentionState):
    w, cfg = ctx.weights, ctx.cfg
    if not 0 <= state.y_prev < cfg.N_c:
        raise ValueError(f"previous class {state.y_prev} outside 0..{cfg.N_c - 1}")
    # W_s applied to the spatially broadcast hidden state is a per-channel constant
    hidden = np.tanh(ctx.proj + (w["attn.W_s"] @ state.s)[:, None])
    e = w["attn.W_t"] @ hidden
    alpha = softmax(e.reshape(cfg.H_p, cfg.W_p), axis=(0, 1))
    g = glimpse(ctx.F, alpha)
    onehot = np.zeros(cfg.N_c)
    onehot[state.y_prev] = 1.0
    emb = linear(onehot, w["embed.W_y"], w["embed.b_y"])
    r = np.concatenate([g, emb])
    s_new = gru_cell(state.s, r, w)
    logits = linear(s_new, w["out.W_o"], w["out.b_o"])
    probs = softmax(logits, axis=0)
    logp = log_softmax(logits)
    return probs, logp, s_new, alpha


def attention_step(F, state: AttentionState, weights: SamWeights, cfg: SamConfig | None = None):
    """One decoding step. Returns ``(probs, new_state, alpha)``.

    The new state's ``y_prev`` is the argmax class; callers doing beam
    search overwrite it with the class they expand.
    """
    cfg = cfg or weights.cfg
    ctx = _Context(as_tensor(F, ndim=3, name="F"), weights, cfg)
    probs, _, s_new, alpha = _step(ctx, state)
    new_state = AttentionState(s=s_new, y_prev=int(np.argmax(probs)), t=state.t + 1)
    return probs, new_state, alpha


def _to_decoded(tokens, rows) -> DecodedText:
    chars = [t for t in tokens if t != EOS]
    step_probs = np.array(rows) if rows else np.zeros((0, 0))
    scores = [float(step_probs[i, t]) for i, t in enumerate(tokens) if t != EOS]
    n = len(chars)
    char_probs = step_probs[:n, 1:] if n else np.zeros((0, max(step_probs.shape[1] - 1, 0)))
    return DecodedText(
        text="".join(class_to_char(t) for t in chars),
        char_scores=scores,
        confidence=float(np.mean(scores)) if scores else 0.0,
        source="sam",
        char_probs=char_probs,
        step_probs=step_probs,
        tokens=list(tokens),
    )


def greedy_search(step_fn, init_state, t_max: int, eos: int = EOS):
    """Argmax search. ``step_fn(state) -> (probs, log_probs, successor)``.

    ``successor(y)`` builds the state that follows emitting class ``y``.
    Returns ``(tokens, prob_rows)``; stops after EOS or ``t_max`` tokens.
    """
    state, tokens, rows = init_state, [], []
    for _ in range(t_max):
        probs, _, successor = step_fn(state)
        y = int(np.argmax(probs))  # first maximum -> lowest index on ties
        tokens.append(y)
        rows.append(probs)
        if y == eos:
            break
        state = successor(y)
    return tokens, rows


def _beam_key(h: Hypothesis):
    return (-h.log_prob, h.tokens)


def beam_search(step_fn, init_state, n_classes: int, t_max: int, k: int, eos: int = EOS) -> list[Hypothesis]:
    """Beam search over class sequences; returns the final beam, best first.

    Finished hypotheses stay in the beam and compete on raw log probability
    (no length normalization). Ties are broken by the token sequence.
    """
    if k < 1:
        raise ValueError(f"beam width must be >= 1, got {k}")
    beam = [Hypothesis((), 0.0, init_state, False)]
    for _ in range(t_max):
        if all(h.finished for h in beam):
            break
        candidates = []
        for h in beam:
            if h.finished:
                candidates.append(h)
                continue
            probs, logp, successor = step_fn(h.state)
            for y in range(n_classes):
                candidates.append(
                    Hypothesis(
                        tokens=h.tokens + (y,),
                        log_prob=h.log_prob + float(logp[y]),
                        state=None if y == eos else successor(y),
                        finished=(y == eos),
                        rows=h.rows + (probs,),
                    )
                )
        candidates.sort(key=_beam_key)
        beam = candidates[:k]
    return beam


def _prepare(feat, weights: SamWeights, cfg: SamConfig | None, encoded: bool):
    cfg = cfg or weights.cfg
    F = as_tensor(feat, ndim=3) if encoded else encode_features(feat, weights, cfg)
    ctx = _Context(F, weights, cfg)

    def step_fn(state: AttentionState):
        probs, logp, s_new, _ = _step(ctx, state)
        return probs, logp, lambda y: AttentionState(s=s_new, y_prev=y, t=state.t + 1)

    return ctx, step_fn


def greedy_decode(feat, weights: SamWeights, cfg: SamConfig | None = None, encoded: bool = False) -> DecodedText:
    """Argmax decoding until EOS or ``T_max`` steps.

    ``feat`` is a raw feature map unless ``encoded=True``, in which case it
    is already the cascaded ``(C + H_p + W_p, H_p, W_p)`` map.
    """
    ctx, step_fn = _prepare(feat, weights, cfg, encoded)
    tokens, rows = greedy_search(step_fn, initial_state(ctx.cfg), ctx.cfg.T_max)
    return _to_decoded(tokens, rows)


def beam_decode(feat, weights: SamWeights, cfg: SamConfig | None = None, k: int | None = None,
                encoded: bool = False) -> DecodedText:
    ctx, step_fn = _prepare(feat, weights, cfg, encoded)
    k = ctx.cfg.beam_k if k is None else k
    best = beam_search(step_fn, initial_state(ctx.cfg), ctx.cfg.N_c, ctx.cfg.T_max, k)[0]
    return _to_decoded(best.tokens, best.rows)

