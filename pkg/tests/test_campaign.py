"""Campaign config defaults and seed derivation."""

import numpy as np
import pytest

from perfbound import campaign, gpc
from perfbound.campaign import CampaignConfig, derive_seed
from perfbound.gpc import KernelParams, TrainingSet
from perfbound.sampling import Method, ParameterBox


class TestDefaults:
    def test_datasets_match_reference_table(self):
        cfg = CampaignConfig()
        rows = [(ds.name, ds.method, ds.n_total) for ds in cfg.datasets]
        assert rows == [
            ("MC100", Method.MONTE_CARLO, 100),
            ("MC1000", Method.MONTE_CARLO, 1000),
            ("LHC100", Method.LATIN_HYPERCUBE, 100),
            ("LHC1000", Method.LATIN_HYPERCUBE, 1000),
        ]
        assert cfg.train_fraction == 0.9
        for ds in cfg.datasets:
            spec = campaign._design_for(cfg, ds)
            assert (spec.n_train, spec.n_test) == (
                (90, 10) if ds.n_total == 100 else (900, 100)
            )

    def test_default_slice_matches_reference_figure(self):
        cfg = CampaignConfig()
        assert cfg.slice_dim == 2
        assert cfg.slice_value == 17.5
        assert cfg.slice_band == 1.5

    def test_grid_default_resolution(self):
        assert CampaignConfig().grid_resolution == (41, 41, 41)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(1, "MC100") == derive_seed(1, "MC100")

    def test_distinct_across_names_and_masters(self):
        seeds = {
            derive_seed(m, n)
            for m in (1, 2, 3)
            for n in ("MC100", "MC1000", "LHC100", "LHC1000")
        }
        assert len(seeds) == 12

    def test_fits_in_64_bits(self):
        assert 0 <= derive_seed(2**63, "x") < 2**64


class TestEmptyBoundaryHandling:
    def test_boundary_command_reports_not_fatal(self, tmp_path):
        # a single-positive-point model predicts collision everywhere
        box = ParameterBox.default()
        tr = TrainingSet(np.array([[0.5, 0.5, 0.5]]), np.array([1.0]), box)
        model = gpc.laplace_fit(tr, KernelParams(2.0, (0.5, 0.5, 0.5)))
        model_path = tmp_path / "oneclass_model.json"
        model.save(model_path)
        cfg = CampaignConfig(out_dir=tmp_path, grid_resolution=(9, 9, 9))
        out_csv, n_points = campaign.cmd_boundary(cfg, model_path)
        assert n_points == 0
        assert out_csv.read_text().splitlines() == [
            "speed_ego,speed_target,aperture_angle,prob"
        ]

    def test_compare_on_empty_boundary_raises_empty_input(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("speed_ego,speed_target,aperture_angle,prob\n")
        cfg = CampaignConfig(out_dir=tmp_path)
        from perfbound.boundary import EmptyInputError

        with pytest.raises(EmptyInputError):
            campaign.cmd_compare(cfg, path, path)
