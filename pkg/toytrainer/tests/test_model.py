import torch

from toytrainer.model import TinySegViT, count_parameters

from tt_helpers import tiny_config


def test_output_shape_covers_every_pixel_and_class():
    cfg = tiny_config()
    model = TinySegViT(cfg)
    x = torch.rand(3, 3, cfg.image_size, cfg.image_size)
    out = model(x)
    assert out.shape == (3, cfg.num_classes, cfg.image_size, cfg.image_size)


def test_init_is_seeded():
    cfg = tiny_config()
    torch.manual_seed(11)
    a = TinySegViT(cfg)
    torch.manual_seed(11)
    b = TinySegViT(cfg)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_gradients_reach_every_parameter():
    cfg = tiny_config()
    torch.manual_seed(0)
    model = TinySegViT(cfg)
    x = torch.rand(2, 3, cfg.image_size, cfg.image_size)
    y = torch.randint(0, cfg.num_classes, (2, cfg.image_size, cfg.image_size))
    loss = torch.nn.functional.cross_entropy(model(x), y)
    loss.backward()
    for name, p in model.named_parameters():
        assert p.grad is not None, name
        assert torch.isfinite(p.grad).all(), name


def test_default_model_is_small():
    from toytrainer.config import ExperimentConfig

    n = count_parameters(TinySegViT(ExperimentConfig()))
    assert 100_000 < n < 5_000_000  # tiny by design: this is a desk-scale model


def test_head_reshape_maps_tokens_to_their_own_patches():
    # Bypass the encoder and drive the head directly: token t's features
    # must land in patch t's pixels and nowhere else.
    cfg = tiny_config()
    torch.manual_seed(3)
    model = TinySegViT(cfg)
    model.eval()
    g, p, k = model.grid, model.patch, model.num_classes
    tokens = torch.zeros(1, g * g, cfg.embed_dim)
    tokens[0, 1] = 1.0  # only token 1 (row 0, column 1 of the patch grid)
    with torch.no_grad():
        x = model.head(tokens)
        x = x.view(1, g, g, p, p, k).permute(0, 5, 1, 3, 2, 4).reshape(1, k, g * p, g * p)
        # Subtract what zero tokens produce (the bias plane) to isolate token 1.
        zero = model.head(torch.zeros_like(tokens))
        zero = zero.view(1, g, g, p, p, k).permute(0, 5, 1, 3, 2, 4).reshape(1, k, g * p, g * p)
    diff = (x - zero).abs().sum(dim=1)[0]
    assert diff[:p, p : 2 * p].sum() > 0  # its own patch reacts
    mask = torch.ones_like(diff, dtype=torch.bool)
    mask[:p, p : 2 * p] = False
    assert diff[mask].sum() == 0  # every other pixel is untouched
