"""
Temperature and label smoothing in the contrastive loss
=======================================================

A two-view batch of unit vectors with well separated classes. Temperature
sets how sharply the softmax over similarities picks out near neighbours, and
for fixed geometry the loss is not monotone in it. Label smoothing moves a
little weight onto other classes, which costs most at low temperature.
"""
import numpy as np

from osrtemp.losses import ce_loss, supcon_loss, supcon_ls_loss

rng = np.random.default_rng(0)
num_classes, per_class, dim = 3, 4, 8

centers = rng.normal(size=(num_classes, dim))
labels = np.repeat(np.arange(num_classes), per_class)
feats = centers[labels] + 0.3 * rng.normal(size=(len(labels), dim))
feats /= np.linalg.norm(feats, axis=1, keepdims=True)

# %%
# Rows 2i and 2i+1 act as the two views of one sample, so labels come in pairs.
print(f"{'tau':>6} {'SupCon':>10} {'LS a=0.1':>10} {'LS a=0.3':>10}")
for tau in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0):
    row = [supcon_loss(feats, labels, tau).value]
    row += [supcon_ls_loss(feats, labels, tau, a, num_classes).value for a in (0.1, 0.3)]
    print(f"{tau:6.2f} " + " ".join(f"{v:10.4f}" for v in row))

# %%
# Same idea for cross-entropy: logits divided by tau before the softmax.
logits = np.array([[3.0, 1.0, 0.0], [0.5, 2.5, 0.0]])
for tau in (0.5, 1.0, 2.0):
    out = ce_loss(logits, [0, 1], tau)
    print(f"CE tau={tau}: loss {out.value:.4f}, |grad| {np.abs(out.d_outputs).sum():.4f}")
