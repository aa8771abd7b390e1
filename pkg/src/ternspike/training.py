"""Surrogate-gradient training of the quantized ternary SNN on a toy task.

The trainable network mirrors the integer inference path: per layer it
learns latent real weights (quantized to the integer lattice on every
forward), a clipping scale alpha for that lattice, a real firing threshold
theta_f in membrane units, and a real exponent k whose rounded value is the
power-of-two gain applied to the synaptic sum.

Three forward modes share one code path:

* train:   discrete spikes and lattice weights, real-valued membranes
           (no floor truncation); backward uses surrogate/straight-through
           derivatives.
* eval:    like train but with the integer path's floor truncations on the
           scaled synaptic sum and on the halved membrane, so an exported
           integer model is spike-identical to eval-mode behavior.
* relaxed: every discrete forward replaced by its smooth surrogate
           (clipped-linear fire, identity-clip quantization, no rounding).
           The backward pass is the exact analytic gradient of this mode,
           which is what grad_check verifies against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import encode_tae
from .errors import ConfigError, DimensionError, DomainError, TrainingDiverged
from .qtsnn import QTLayer, qt_forward
from .quant import K_RANGE, quantize
from .signals import gen_corpus

N_CLASSES = 3


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.05
    momentum: float = 0.9
    gamma: float = 0.5          # surrogate window half-width
    seed: int = 1
    bits_w: int = 4
    bits_u: int = 4
    timesteps: int = 16
    fan_in: int = 16            # samples per timestep; signal length = T * fan_in
    hidden: tuple[int, ...] = (32,)
    corpus_n: int = 600
    encoder_a: float = 1.1
    logit_scale: float = 0.125  # softmax temperature on the spike-count readout
    aux_lr_scale: float = 0.1   # scale/threshold/exponent step relative to lr

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.timesteps < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1, timesteps >= 1 required")
        if not (self.lr > 0 and self.gamma > 0):
            raise ConfigError("lr and gamma must be positive")
        if not (self.logit_scale > 0 and self.aux_lr_scale > 0):
            raise ConfigError("logit_scale and aux_lr_scale must be positive")


def surrogate_fire(u, v_th: float, gamma: float):
    """Ternary firing with a rectangular surrogate derivative.

    Forward: +1 at u >= v_th, -1 at u <= -v_th, else 0.  Backward:
    1/(2*gamma) inside either window |u -+ v_th| <= gamma, else 0.
    """
    if not (gamma > 0):
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    arr = np.asarray(u, dtype=np.float64)
    spike = np.where(arr >= v_th, 1.0, np.where(arr <= -v_th, -1.0, 0.0))
    window = (np.abs(arr - v_th) <= gamma) | (np.abs(arr + v_th) <= gamma)
    grad = window / (2.0 * gamma)
    if np.isscalar(u):
        return float(spike), float(grad)
    return spike, grad


def ste_quantize(x, alpha: float, b: int):
    """Quantize with straight-through gradients.

    Forward is the lattice projection; the backward treats it as an
    identity clip: d(level)/dx = 1 inside [-alpha, alpha] and 0 outside,
    d(level)/dalpha = sign(x) outside the clip range and 0 inside.
    """
    level = quantize(x, alpha, b)
    arr = np.asarray(x, dtype=np.float64)
    inside = np.abs(arr) <= alpha
    dx = inside.astype(np.float64)
    dalpha = np.where(inside, 0.0, np.sign(arr))
    if np.isscalar(x):
        return float(level), float(dx), float(dalpha)
    return level, dx, dalpha


@dataclass
class LayerVars:
    """Learnable parameters and SGD momentum buffers for one dense layer."""

    w_latent: np.ndarray   # (fan_out, fan_in)
    alpha_w: float
    theta_f: float
    k_latent: float
    vel_w: np.ndarray = field(init=False)
    vel_alpha: float = field(init=False, default=0.0)
    vel_theta: float = field(init=False, default=0.0)
    vel_k: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.vel_w = np.zeros_like(self.w_latent)


def _m_levels(bits: int) -> int:
    return 2 ** (bits - 1) - 1


def _round_away(q):
    return np.sign(q) * np.floor(np.abs(q) + 0.5)


class QTNet:
    """Stack of dense ternary-spiking layers with learnable quantization."""

    def __init__(self, layer_sizes, cfg: TrainConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.layers = []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            w = rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_out, fan_in))
            self.layers.append(
                LayerVars(
                    w_latent=w,
                    alpha_w=float(np.max(np.abs(w))),
                    theta_f=2.0,
                    k_latent=-1.0,
                )
            )

    # -- forward ----------------------------------------------------------

    def _effective(self, lv: LayerVars, mode: str):
        """Lattice weights (or their relaxed stand-in) and power-of-two gain."""
        mw = _m_levels(self.cfg.bits_w)
        scaled = np.clip(lv.w_latent / lv.alpha_w, -1.0, 1.0) * mw
        wq = scaled if mode == "relaxed" else _round_away(scaled)
        k = np.clip(lv.k_latent, -K_RANGE, K_RANGE)
        if mode != "relaxed":
            k = float(np.round(k))
        return wq, 2.0**k

    def forward(self, x, mode: str = "train", want_tape: bool = False):
        """Run a batch of shape (B, T, fan_in); returns score matrix (B, C).

        With want_tape=True also returns the per-step tape needed for
        backward() and for spike-trace comparisons.
        """
        if mode not in ("train", "eval", "relaxed"):
            raise ConfigError(f"unknown forward mode {mode!r}")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != self.layers[0].w_latent.shape[1]:
            raise DimensionError(f"expected (B, T, {self.layers[0].w_latent.shape[1]}), got {x.shape}")
        batch, t_steps = x.shape[0], x.shape[1]
        mu = _m_levels(self.cfg.bits_u)
        eff = [self._effective(lv, mode) for lv in self.layers]
        stored = [np.zeros((batch, lv.w_latent.shape[0])) for lv in self.layers]
        tape = [[None] * len(self.layers) for _ in range(t_steps)]
        scores = np.zeros((batch, self.layers[-1].w_latent.shape[0]))
        for t in range(t_steps):
            sp = x[:, t, :]  # (B, fan_in)
            for li, (lv, (wq, gain)) in enumerate(zip(self.layers, eff)):
                drive = gain * (sp @ wq.T)
                if mode == "eval":
                    drive = np.floor(drive)
                carried = stored[li] * 0.5
                if mode == "eval":
                    carried = np.floor(carried)
                h = carried + drive
                if mode == "relaxed":
                    o = _relaxed_fire(h, lv.theta_f, self.cfg.gamma)
                else:
                    o, _ = surrogate_fire(h, lv.theta_f, self.cfg.gamma)
                r = np.clip(h, -mu, mu)
                stored[li] = (1.0 - np.abs(o)) * r
                tape[t][li] = (sp, drive, h, o, r)
                sp = o
            scores += sp
        if want_tape:
            return scores, tape
        return scores

    # -- backward ---------------------------------------------------------

    def backward(self, tape, dscores, mode: str = "train"):
        """Backpropagate through time. dscores has shape (B, C).

        mode must match the forward pass that produced the tape so the
        weight matvecs reuse the same effective weights.  Returns per-layer
        gradient dicts with keys w, alpha, theta, k.  The derivative rules
        are exact for the relaxed forward; applied to a train-mode tape
        they are the surrogate/straight-through training gradient.
        """
        cfg = self.cfg
        mw = _m_levels(cfg.bits_w)
        mu = _m_levels(cfg.bits_u)
        t_steps = len(tape)
        n_layers = len(self.layers)
        eff = [self._effective(lv, mode) for lv in self.layers]
        grads = [
            {"w": np.zeros_like(lv.w_latent), "alpha": 0.0, "theta": 0.0, "k": 0.0}
            for lv in self.layers
        ]
        dwq = [np.zeros_like(lv.w_latent) for lv in self.layers]
        ds = [np.zeros((dscores.shape[0], lv.w_latent.shape[0])) for lv in self.layers]
        for t in reversed(range(t_steps)):
            dx_above = None
            for li in reversed(range(n_layers)):
                lv = self.layers[li]
                sp, drive, h, o, r = tape[t][li]
                do = np.zeros_like(h)
                if li == n_layers - 1:
                    do += dscores
                if dx_above is not None:
                    do += dx_above
                # stored-membrane path: s = (1 - |o|) * r
                do += ds[li] * (-np.sign(o)) * r
                dr = ds[li] * (1.0 - np.abs(o))
                dh = dr * (np.abs(h) <= mu)
                # firing function
                up = np.abs(h - lv.theta_f) <= cfg.gamma
                lo = np.abs(h + lv.theta_f) <= cfg.gamma
                dh += do * ((up | lo) / (2.0 * cfg.gamma))
                grads[li]["theta"] += float(np.sum(do * (lo.astype(float) - up.astype(float)) / (2.0 * cfg.gamma)))
                # membrane recurrence and synaptic drive
                ds[li] = dh * 0.5
                d_drive = dh
                grads[li]["k"] += math.log(2.0) * float(np.sum(d_drive * drive))
                wq, gain = eff[li]
                dwq[li] += gain * (d_drive.T @ sp)
                dx_above = gain * (d_drive @ wq)
        for li, lv in enumerate(self.layers):
            inside = np.abs(lv.w_latent) <= lv.alpha_w
            grads[li]["w"] = dwq[li] * (mw / lv.alpha_w) * inside
            grads[li]["alpha"] = float(
                np.sum(dwq[li] * (-(mw * lv.w_latent) / lv.alpha_w**2) * inside)
            )
            if abs(lv.k_latent) > K_RANGE:
                grads[li]["k"] = 0.0
        return grads


def _relaxed_fire(h, v_th: float, gamma: float):
    """Smooth stand-in for ternary firing: linear ramps of slope 1/(2*gamma)
    through each threshold, flat at -1/0/+1 elsewhere."""
    up = np.clip((h - v_th + gamma) / (2.0 * gamma), 0.0, 1.0)
    down = np.clip((-h - v_th + gamma) / (2.0 * gamma), 0.0, 1.0)
    return up - down


# ---------------------------------------------------------------------------
# Toy task
# ---------------------------------------------------------------------------

def build_toy_dataset(cfg: TrainConfig):
    """TAE-encode the labeled waveform corpus and reshape each spike train
    into (timesteps, fan_in) chunks, then append a constant +1 bias channel
    per timestep.  Returns (X, y) with X of shape (N, T, fan_in + 1) over
    {-1, 0, 1}.

    The bias channel matters: the spiking dynamics are odd (negating every
    input negates every membrane and spike), and waveform classes that are
    closed under negation (a half-period phase shift of a square or sine
    negates it) would otherwise have class-mean readouts pinned at zero.
    A constant spike lane lets neurons build sign-specific features.
    """
    length = cfg.timesteps * cfg.fan_in
    corpus = gen_corpus("square_saw_sine", cfg.corpus_n, length, cfg.seed)
    xs = np.ones((len(corpus), cfg.timesteps, cfg.fan_in + 1), dtype=np.int8)
    ys = np.zeros(len(corpus), dtype=np.int64)
    for i, sig in enumerate(corpus):
        train, _ = encode_tae(sig, None, cfg.encoder_a)
        xs[i, :, : cfg.fan_in] = train.values.reshape(cfg.timesteps, cfg.fan_in)
        ys[i] = sig.label
    return xs, ys


def attach_bias_channel(chunks: np.ndarray) -> np.ndarray:
    """Append the constant +1 lane to (T, fan_in) or (B, T, fan_in) spikes."""
    pad = np.ones(chunks.shape[:-1] + (1,), dtype=chunks.dtype)
    return np.concatenate([chunks, pad], axis=-1)


def stratified_split(y: np.ndarray, test_frac: float, rng: np.random.Generator):
    """Per-class shuffled 80/20-style split; returns (train_idx, test_idx)."""
    train_idx, test_idx = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(idx.size * test_frac))
        test_idx.extend(idx[:n_test])
        train_idx.extend(idx[n_test:])
    return np.sort(np.array(train_idx)), np.sort(np.array(test_idx))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_dscores(scores, y):
    p = _softmax(scores)
    n = scores.shape[0]
    loss = float(-np.mean(np.log(p[np.arange(n), y] + 1e-300)))
    d = p.copy()
    d[np.arange(n), y] -= 1.0
    return loss, d / n


def _accuracy(scores, y) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == y))


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float


def history_to_csv(history) -> str:
    lines = ["epoch,train_loss,train_acc,test_acc"]
    for m in history:
        lines.append(f"{m.epoch},{m.train_loss:.17g},{m.train_acc:.17g},{m.test_acc:.17g}")
    return "\n".join(lines) + "\n"


def train_toy(cfg: TrainConfig = TrainConfig()):
    """Train the 3-class waveform classifier.  Deterministic per seed.

    Returns (model, history); history rows are EpochMetrics, with epoch 0
    holding the untrained baseline.  Test accuracy is measured in eval mode
    (integer-path semantics) so it transfers verbatim to the exported model.
    Raises TrainingDiverged if the loss turns non-finite.
    """
    xs, ys = build_toy_dataset(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed + 1))
    train_idx, test_idx = stratified_split(ys, 0.2, rng)
    x_tr, y_tr = xs[train_idx], ys[train_idx]
    x_te, y_te = xs[test_idx], ys[test_idx]

    sizes = (cfg.fan_in + 1, *cfg.hidden, N_CLASSES)
    model = QTNet(sizes, cfg, rng)

    def epoch_metrics(epoch, loss):
        tr_scores = model.forward(x_tr, mode="train")
        te_scores = model.forward(x_te, mode="eval")
        return EpochMetrics(epoch, loss, _accuracy(tr_scores, y_tr), _accuracy(te_scores, y_te))

    baseline_loss, _ = _loss_and_dscores(model.forward(x_tr, mode="train") * cfg.logit_scale, y_tr)
    history = [epoch_metrics(0, baseline_loss)]

    n_train = x_tr.shape[0]
    aux_lr = cfg.lr * cfg.aux_lr_scale
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        losses = []
        for start in range(0, n_train, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            xb, yb = x_tr[sel], y_tr[sel]
            scores, tape = model.forward(xb, mode="train", want_tape=True)
            loss, dscores = _loss_and_dscores(scores * cfg.logit_scale, yb)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} at epoch {epoch}")
            losses.append(loss)
            grads = model.backward(tape, dscores * cfg.logit_scale, mode="train")
            for lv, g in zip(model.layers, grads):
                lv.vel_w = cfg.momentum * lv.vel_w - cfg.lr * g["w"]
                lv.w_latent = lv.w_latent + lv.vel_w
                lv.vel_alpha = cfg.momentum * lv.vel_alpha - aux_lr * g["alpha"]
                lv.alpha_w = max(lv.alpha_w + lv.vel_alpha, 1e-3)
                lv.vel_theta = cfg.momentum * lv.vel_theta - aux_lr * g["theta"]
                lv.theta_f = max(lv.theta_f + lv.vel_theta, 0.05)
                lv.vel_k = cfg.momentum * lv.vel_k - aux_lr * g["k"]
                lv.k_latent = float(np.clip(lv.k_latent + lv.vel_k, -K_RANGE, K_RANGE))
        history.append(epoch_metrics(epoch, float(np.mean(losses))))
    return model, history


# ---------------------------------------------------------------------------
# Export and verification
# ---------------------------------------------------------------------------

def export_for_inference(model: QTNet) -> list[QTLayer]:
    """Freeze the trained model into integer inference layers."""
    cfg = model.cfg
    mw = _m_levels(cfg.bits_w)
    out = []
    for lv in model.layers:
        if lv.theta_f <= 0:
            raise DomainError("theta_f must be positive at export")
        w_int = _round_away(np.clip(lv.w_latent / lv.alpha_w, -1.0, 1.0) * mw).astype(np.int64)
        k = int(np.clip(round(lv.k_latent), -K_RANGE, K_RANGE))
        theta = int(math.ceil(lv.theta_f))
        out.append(QTLayer(w_int, k=k, theta=theta, bits_w=cfg.bits_w, bits_u=cfg.bits_u))
    return out


def eval_spike_traces(model: QTNet, x) -> list[np.ndarray]:
    """Per-layer eval-mode spike traces for a batch, shaped (B, T, fan_out)."""
    _, tape = model.forward(x, mode="eval", want_tape=True)
    traces = []
    for li in range(len(model.layers)):
        per_t = [tape[t][li][3] for t in range(len(tape))]
        traces.append(np.stack(per_t, axis=1).astype(np.int8))
    return traces


def export_agreement(model: QTNet, layers: list[QTLayer], x) -> bool:
    """True when the exported integer model reproduces eval-mode spikes
    exactly, layer by layer and timestep by timestep, on every sample."""
    x = np.asarray(x)
    eval_traces = eval_spike_traces(model, x)
    for bi in range(x.shape[0]):
        _, rec = qt_forward(layers, x[bi], record=True)
        for li in range(len(layers)):
            if not np.array_equal(rec.spikes[li], eval_traces[li][bi]):
                return False
    return True


def _region_signature(model: QTNet, tape) -> np.ndarray:
    """Encode which linear piece of the relaxed forward every activation
    sits on: firing-ramp segment and saturation segment per membrane, clip
    segment per latent weight.  Two forwards with equal signatures lie in
    the same polyhedral region, where the model is polynomial."""
    mu = _m_levels(model.cfg.bits_u)
    gamma = model.cfg.gamma
    codes = []
    for li, lv in enumerate(model.layers):
        w = lv.w_latent
        codes.append(((w >= -lv.alpha_w).astype(np.int8) + (w >= lv.alpha_w)).ravel())
        edges = (-lv.theta_f - gamma, -lv.theta_f + gamma, lv.theta_f - gamma, lv.theta_f + gamma)
        for t in range(len(tape)):
            h = tape[t][li][2]
            fire = sum((h >= e).astype(np.int8) for e in edges)
            sat = (h >= -mu).astype(np.int8) + (h >= mu)
            codes.append(fire.ravel())
            codes.append(sat.ravel())
    return np.concatenate(codes)


def grad_check(model: QTNet, sample, n_params: int = 20, seed: int = 0, step: float = 1e-4) -> float:
    """Compare the analytic backward of the relaxed model against central
    finite differences on randomly chosen parameters.

    The relaxed model is piecewise polynomial; a finite-difference probe is
    only meaningful when both evaluation points sit on the same piece, so
    parameters whose probe interval straddles a kink (a clip boundary or a
    firing-ramp edge) are skipped and replaced by the next candidate.
    Returns the max relative error; probes where both gradients are below
    1e-8 count as zero error (dead surrogate windows agree trivially).
    """
    x, y = sample
    xb = np.asarray(x, dtype=np.float64)[None, :, :]
    yb = np.array([y])

    def relaxed_eval():
        scores, tape = model.forward(xb, mode="relaxed", want_tape=True)
        loss, _ = _loss_and_dscores(scores, yb)
        return loss, _region_signature(model, tape)

    scores, tape = model.forward(xb, mode="relaxed", want_tape=True)
    _, dscores = _loss_and_dscores(scores, yb)
    grads = model.backward(tape, dscores, mode="relaxed")

    slots = []
    for li, lv in enumerate(model.layers):
        for idx in np.ndindex(lv.w_latent.shape):
            slots.append(("w", li, idx))
        slots.extend([("alpha", li, None), ("theta", li, None), ("k", li, None)])
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(slots))

    def get_set(kind, li, idx, value=None):
        lv = model.layers[li]
        if kind == "w":
            if value is None:
                return lv.w_latent[idx]
            lv.w_latent[idx] = value
        else:
            attr = {"alpha": "alpha_w", "theta": "theta_f", "k": "k_latent"}[kind]
            if value is None:
                return getattr(lv, attr)
            setattr(lv, attr, value)

    max_err = 0.0
    checked = 0
    for slot in order:
        if checked >= n_params:
            break
        kind, li, idx = slots[slot]
        analytic = grads[li][kind][idx] if kind == "w" else grads[li][kind]
        orig = get_set(kind, li, idx)
        get_set(kind, li, idx, orig + step)
        lp, reg_p = relaxed_eval()
        get_set(kind, li, idx, orig - step)
        lm, reg_m = relaxed_eval()
        get_set(kind, li, idx, orig)
        if not np.array_equal(reg_p, reg_m):
            continue  # probe interval crosses a kink; central FD is invalid there
        checked += 1
        fd = (lp - lm) / (2 * step)
        denom = max(abs(analytic), abs(fd))
        if denom < 1e-8:
            continue
        max_err = max(max_err, abs(analytic - fd) / denom)
    return max_err
