"""Training-objective contracts and seeded generation."""

import pytest
import torch

from sketch_neural.data import PairDataset, TrainingBatch, make_batch
from sketch_neural.errors import DataError, NotTrainedError
from sketch_neural.model import ToyDenoiser, prompt_embedding, prompt_matrix
from sketch_neural.sample import generate, generate_batch
from sketch_neural.schedule import DiffusionSchedule
from sketch_neural.train import train_loop, train_step


class EchoNoise(ToyDenoiser):
    """Cheat model that returns the true noise (stashed before the call)."""

    def __init__(self):
        super().__init__(base=8)
        self.true_eps = None

    def forward(self, x_t, t, prompt_emb, condition):
        return self.true_eps


class Zeros(ToyDenoiser):
    def forward(self, x_t, t, prompt_emb, condition):
        return torch.zeros_like(x_t)


def batch_of(n=4, hw=16, T=50, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return TrainingBatch(
        x0=torch.randn(n, 1, hw, hw, generator=gen),
        t=torch.randint(1, T + 1, (n,), generator=gen),
        eps=torch.randn(n, 1, hw, hw, generator=gen),
        prompts=["a black and white sketch of a circle"] * n,
        condition=torch.randn(n, 1, hw, hw, generator=gen),
    )


def test_loss_zero_when_model_outputs_true_noise():
    sched = DiffusionSchedule.linear(T=50)
    batch = batch_of()
    model = EchoNoise()
    model.true_eps = batch.eps
    loss = train_step(batch, model, sched)
    assert float(loss) == 0.0


def test_loss_about_one_for_zero_model():
    sched = DiffusionSchedule.linear(T=50)
    batch = batch_of(n=8, hw=32, seed=3)
    loss = train_step(batch, Zeros(), sched)
    # E[eps^2] = 1 for unit Gaussian noise
    assert abs(float(loss) - 1.0) < 0.05


def test_training_batch_shape_mismatch_rejected():
    gen = torch.Generator().manual_seed(0)
    with pytest.raises(DataError):
        TrainingBatch(
            x0=torch.randn(2, 1, 8, 8, generator=gen),
            t=torch.ones(2, dtype=torch.long),
            eps=torch.randn(2, 1, 8, 8, generator=gen),
            prompts=["", ""],
            condition=torch.randn(2, 1, 4, 4, generator=gen),
        )


def test_prompt_embedding_deterministic_and_empty():
    a = prompt_embedding("a black and white sketch of a cat")
    b = prompt_embedding("a black and white sketch of a cat")
    assert torch.equal(a, b)
    assert abs(float(a.norm()) - 1.0) < 1e-6
    assert torch.equal(prompt_embedding(""), torch.zeros(32))
    c = prompt_embedding("a black and white sketch of a dog")
    assert not torch.equal(a, c)


def test_gradients_reach_only_model_parameters():
    sched = DiffusionSchedule.linear(T=50)
    batch = batch_of(n=2, hw=16)
    model = ToyDenoiser(base=8)
    loss = train_step(batch, model, sched)
    loss.backward()
    assert all(p.grad is not None for p in model.parameters())
    # inputs and fixed prompt features never require grad
    assert not batch.x0.requires_grad and not batch.condition.requires_grad
    assert not prompt_matrix(batch.prompts).requires_grad


def test_make_batch_deterministic(tiny_dataset):
    ds = PairDataset(tiny_dataset)
    sched = DiffusionSchedule.linear(T=100)
    a = make_batch(ds, sched, batch_size=4, seed=11)
    b = make_batch(ds, sched, batch_size=4, seed=11)
    assert torch.equal(a.x0, b.x0) and torch.equal(a.eps, b.eps) and torch.equal(a.t, b.t)
    assert a.prompts == b.prompts
    assert a.x0.min() >= -1.0 and a.x0.max() <= 1.0


def test_untrained_model_refuses_generation():
    model = ToyDenoiser(base=8)
    sched = DiffusionSchedule.linear(T=10)
    with pytest.raises(NotTrainedError):
        generate(torch.ones(1, 16, 16), "", model, sched, seed=0)


def test_short_training_runs_and_generation_is_seeded(tiny_dataset):
    torch.manual_seed(0)
    torch.set_num_threads(2)
    ds = PairDataset(tiny_dataset)
    sched = DiffusionSchedule.linear(T=20)
    model = ToyDenoiser(base=8)
    losses = train_loop(ds, model, sched, steps=12, batch_size=4, seed=1)
    assert len(losses) == 12
    assert int(model.trained_steps) == 12
    cond = torch.ones(2, 1, 64, 64)
    prompts = ["a black and white sketch of a circle", ""]  # empty prompt accepted
    g1 = generate_batch(cond, prompts, model, sched, seed=4)
    g2 = generate_batch(cond, prompts, model, sched, seed=4)
    g3 = generate_batch(cond, prompts, model, sched, seed=5)
    assert torch.equal(g1, g2)
    assert not torch.equal(g1, g3)
    assert g1.min() >= -1.0 and g1.max() <= 1.0
