"""JSON round trips for network and cost documents."""
import json

import numpy as np
import pytest

from plateau_lab import dqnn
from plateau_lab.ensembles import RngStream, sample_product_training_pair
from plateau_lab.serialize import (
    cost_spec_from_json,
    cost_spec_to_json,
    network_from_json,
    network_to_json,
)


@pytest.mark.parametrize(
    "builder",
    [
        lambda gen: dqnn.build_toy_network(2, [0.3, 1.7]),
        lambda gen: dqnn.build_global_deep_haar(2, gen),
        lambda gen: dqnn.build_global_deep_circuit(1, gen, eta=3),
        lambda gen: dqnn.build_brick_network(2, 2, gen, probe_first_block=True),
    ],
)
def test_network_round_trip_preserves_cost(builder):
    gen = RngStream(71, 0).generator()
    net = builder(gen)
    doc = json.loads(json.dumps(network_to_json(net)))
    back = network_from_json(doc)
    assert back.layer_widths == net.layer_widths
    assert back.family == net.family
    pair = sample_product_training_pair(net.n_in, net.n_out, RngStream(71, 1))
    for kind in ("global", "local"):
        cs = dqnn.CostSpec(kind, (pair,))
        assert dqnn.cost(back, cs) == pytest.approx(dqnn.cost(net, cs), abs=1e-12)


def test_cost_spec_round_trip():
    pair = sample_product_training_pair(2, 2, RngStream(72, 0))
    cs = dqnn.CostSpec("local", (pair, pair))
    doc = json.loads(json.dumps(cost_spec_to_json(cs)))
    back = cost_spec_from_json(doc)
    assert back.kind == "local"
    assert len(back.pairs) == 2
    assert np.allclose(back.pairs[0].input_vector, pair.input_vector)
    assert np.allclose(back.pairs[0].target_vector, pair.target_vector)


def test_global_only_pair_round_trip(gen):
    vec = gen.standard_normal(4) + 1j * gen.standard_normal(4)
    vec /= np.linalg.norm(vec)
    target = gen.standard_normal(4) + 1j * gen.standard_normal(4)
    target /= np.linalg.norm(target)
    pair = dqnn.TrainingPair(input_vector=vec, target_vector=target)
    cs = dqnn.CostSpec("global", (pair,))
    back = cost_spec_from_json(json.loads(json.dumps(cost_spec_to_json(cs))))
    assert np.allclose(back.pairs[0].target_vector, target)
    assert back.pairs[0].target_qubit_states is None
