import pytest

from osrtemp.data import GeneratorSpec
from osrtemp.harness import ExperimentConfig, ModelConfig, ProbeConfig


@pytest.fixture
def tiny_config():
    """A config that trains in well under a second."""

    def make(**kw):
        base = dict(
            dataset=GeneratorSpec(n_classes_total=6, n_known=4, dim=4, samples_per_class=20,
                                  cluster_spread=0.5, seed=0),
            epochs=6,
            batch_size=16,
            model=ModelConfig(hidden=[8, 8], proj_dim=8),
            probe=ProbeConfig(epochs=5, lr=0.05),
        )
        base.update(kw)
        return ExperimentConfig(**base)

    return make
