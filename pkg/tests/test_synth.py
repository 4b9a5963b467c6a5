import numpy as np
import pytest

from nextchannel.data import SynthSpec, orthogonal_signatures, synth_generate
from nextchannel.exceptions import ConfigurationError, GenerationError

SMALL = SynthSpec(
    num_images=2,
    image_size=96,
    num_types=3,
    cells_per_image=20,
    channels=4,
    seed=11,
)


def test_deterministic_given_seed():
    a = synth_generate(SMALL)
    b = synth_generate(SMALL)
    for ia, ib in zip(a.images, b.images):
        assert np.array_equal(ia.pixels, ib.pixels)
    for ma, mb in zip(a.masks, b.masks):
        assert np.array_equal(ma, mb)
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]


def test_different_seed_differs():
    a = synth_generate(SMALL)
    c = synth_generate(SynthSpec(**{**SMALL.to_dict(), "seed": 12}))
    assert not np.array_equal(a.images[0].pixels, c.images[0].pixels)


def test_signature_contrast_inside_vs_outside_mask():
    res = synth_generate(SMALL)
    img = res.images[0]
    mask = res.masks[0]
    recs = [r for r in res.records if r.image_id == img.image_id]
    checked = 0
    for rec in recs[:10]:
        t = int(rec.label.removeprefix("type"))
        marker = t  # orthogonal signatures: type t expresses channel t
        label = int(rec.mask_ref)
        inside = img.pixels[mask == label, marker].mean()
        outside = img.pixels[mask == 0, marker].mean()
        assert inside > outside + 0.5, (rec.cell_id, inside, outside)
        checked += 1
    assert checked > 0


def test_mixture_histogram_within_3_sigma():
    spec = SynthSpec(
        num_images=5,
        image_size=160,
        num_types=5,
        cells_per_image=80,
        channels=8,
        type_mixture=(0.4, 0.3, 0.1, 0.1, 0.1),
        seed=3,
    )
    res = synth_generate(spec)
    n = len(res.records)
    counts = np.zeros(5)
    for r in res.records:
        counts[int(r.label.removeprefix("type"))] += 1
    for t, p in enumerate(spec.type_mixture):
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(counts[t] - n * p) <= 3 * sigma, (t, counts[t], n * p, sigma)


def test_masks_match_records():
    res = synth_generate(SMALL)
    for img, mask in zip(res.images, res.masks):
        recs = [r for r in res.records if r.image_id == img.image_id]
        labels = set(int(r.mask_ref) for r in recs)
        present = set(np.unique(mask)) - {0}
        assert present == labels
        for rec in recs[:5]:
            assert mask[rec.row, rec.col] == int(rec.mask_ref)


def test_records_in_bounds():
    res = synth_generate(SMALL)
    for r in res.records:
        assert 0 <= r.row < SMALL.image_size
        assert 0 <= r.col < SMALL.image_size


def test_infeasible_density_raises():
    spec = SynthSpec(
        num_images=1, image_size=64, num_types=2, cells_per_image=500, channels=2, seed=0
    )
    with pytest.raises(GenerationError, match="density|separation|place"):
        synth_generate(spec)


def test_orthogonal_signatures_shape():
    sig = orthogonal_signatures(3, 5, level=2.0)
    assert len(sig) == 3 and all(len(r) == 5 for r in sig)
    assert sig[1][1] == 2.0 and sum(sig[1]) == 2.0
    with pytest.raises(ConfigurationError):
        orthogonal_signatures(6, 5)


def test_signature_row_width_must_match():
    with pytest.raises(ConfigurationError):
        SynthSpec(num_types=2, type_signatures=((1.0, 0.0), (0.0,)))
