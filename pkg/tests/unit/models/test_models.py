"""
Unit tests for parameter models, array records and file documents
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.models.clr_models import CLRModel, Dataset, GroundTruth, augment
from src.models.document_models import ModelDocument, Provenance, TruthDocument
from src.models.problem_models import (
    EliteParams,
    EMConfig,
    ProblemSpec,
    SplitParams,
    split_sizes,
)
from src.utils.clr_exceptions import ShapeMismatchError


class TestProblemSpec:
    """Test ProblemSpec validation"""

    def test_valid_spec(self):
        """Test a valid spec and its total size"""
        spec = ProblemSpec(K=3, p=5, cluster_sizes=[100, 200, 300])

        assert spec.N == 600
        assert spec.dp == 0.2
        assert spec.eta == 0.2

    def test_sizes_must_match_clusters(self):
        """Test one size per cluster is required"""
        with pytest.raises(ValidationError):
            ProblemSpec(K=3, p=5, cluster_sizes=[100, 100])

    def test_sizes_must_be_positive(self):
        """Test empty clusters are rejected"""
        with pytest.raises(ValidationError):
            ProblemSpec(K=2, p=5, cluster_sizes=[100, 0])

    @pytest.mark.parametrize("field,value", [("dp", 1.0), ("dp", -0.1), ("eta", -1.0)])
    def test_parameter_ranges(self, field, value):
        """Test out-of-range class parameters"""
        with pytest.raises(ValidationError):
            ProblemSpec(K=2, p=5, cluster_sizes=[10, 10], **{field: value})

    def test_unknown_fields_rejected(self):
        """Test extra keys are forbidden"""
        with pytest.raises(ValidationError):
            ProblemSpec(K=2, p=5, cluster_sizes=[10, 10], noise=0.1)

    def test_from_proportions(self):
        """Test sizes split total N by proportions"""
        spec = ProblemSpec.from_proportions([0.7, 0.3], 1000, p=5)

        assert spec.K == 2
        assert spec.cluster_sizes == [700, 300]


class TestSplitSizes:
    """Test largest-remainder rounding"""

    def test_sizes_sum_to_total(self):
        """Test rounding never loses rows"""
        sizes = split_sizes([1, 1, 1], 1000)

        assert sum(sizes) == 1000
        assert sorted(sizes) == [333, 333, 334]

    def test_ratio_notation(self):
        """Test unnormalized shares such as 90:10"""
        assert split_sizes([90, 10], 1000) == [900, 100]

    def test_invalid_inputs(self):
        """Test non-positive shares and totals"""
        with pytest.raises(ValueError):
            split_sizes([0.5, 0.0], 100)
        with pytest.raises(ValueError):
            split_sizes([0.5, 0.5], 0)


class TestEngineParameters:
    """Test EMConfig, SplitParams and EliteParams"""

    def test_em_defaults(self):
        """Test documented defaults"""
        cfg = EMConfig(K=3)

        assert cfg.zeta == 0.0
        assert cfg.max_loop == 500
        assert cfg.conv_window == 7
        assert cfg.conv_tol == 1e-2
        assert cfg.collapse_frac == 0.10
        assert cfg.perturb_count == 10
        assert cfg.init == "kmeans"

    def test_collapse_threshold_below_even_share(self):
        """Test collapse_frac must leave room for K even clusters"""
        with pytest.raises(ValidationError):
            EMConfig(K=10, collapse_frac=0.1)
        assert EMConfig(K=9, collapse_frac=0.1).K == 9

    def test_momentum_range(self):
        """Test zeta must be in [0, 1)"""
        with pytest.raises(ValidationError):
            EMConfig(K=2, zeta=1.0)

    def test_split_defaults(self):
        """Test split parameter defaults"""
        params = SplitParams()

        assert params.f_range == (5.0, 15.0)
        assert params.xi == 3.0
        assert params.theta_pairs[0] == (45.0, 55.0)

    def test_theta_pairs_must_straddle_median(self):
        """Test slabs that do not contain the median are rejected"""
        with pytest.raises(ValidationError):
            SplitParams(theta_pairs=[(55.0, 65.0)])

    def test_f_range_ordered(self):
        """Test the shortlist range must be increasing"""
        with pytest.raises(ValidationError):
            SplitParams(f_range=(20.0, 10.0))

    def test_small_cluster_threshold(self):
        """Test the default 1/(3K) and an explicit override"""
        assert EliteParams().small_cluster_threshold(4) == pytest.approx(1.0 / 12.0)
        assert EliteParams(t_s3=0.05).small_cluster_threshold(4) == 0.05


class TestArrayRecords:
    """Test Dataset, GroundTruth and CLRModel"""

    def test_dataset_reshapes_vector_x(self):
        """Test a 1-D X becomes a single column"""
        ds = Dataset(X=np.arange(5.0), y=np.arange(5.0))

        assert ds.N == 5
        assert ds.p == 1
        assert ds.xtil().shape == (5, 2)

    def test_dataset_shape_mismatch(self):
        """Test X and y row counts must agree"""
        with pytest.raises(ShapeMismatchError):
            Dataset(X=np.zeros((5, 2)), y=np.zeros(4))

    def test_dataset_rejects_nan(self):
        """Test non-finite entries are rejected"""
        with pytest.raises(ShapeMismatchError):
            Dataset(X=np.array([[1.0], [np.nan]]), y=np.zeros(2))

    def test_subset_keeps_labels(self):
        """Test subset carries matching labels"""
        ds = Dataset(X=np.arange(4.0), y=np.arange(4.0), labels=[0, 1, 0, 1])
        sub = ds.subset(ds.labels == 1)

        assert sub.N == 2
        assert np.all(sub.labels == 1)

    def test_ground_truth_corrupted_mask(self):
        """Test label −1 marks corrupted rows"""
        truth = GroundTruth(beta=np.ones((2, 3)), sigma=[0.1, 0.2], labels=[0, -1, 1])

        assert truth.K == 2
        assert truth.corrupted.tolist() == [False, True, False]

    @pytest.mark.parametrize("sigma", [[0.1, 0.0], [0.1, -0.2]])
    def test_ground_truth_sigma_positive(self, sigma):
        """Test true noise scales must be strictly positive"""
        with pytest.raises(ValueError, match="positive"):
            GroundTruth(beta=np.ones((2, 3)), sigma=sigma, labels=[0, 1])

    def test_model_mix_from_weights(self):
        """Test mix defaults to the column means of the weights"""
        weights = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        model = CLRModel(beta=np.zeros((2, 2)), sigma=[1.0, 1.0], weights=weights)

        np.testing.assert_allclose(model.mix, [0.625, 0.375])

    def test_model_predictions(self):
        """Test per-cluster predictions X̃ β_k"""
        model = CLRModel(beta=[[1.0, 2.0], [0.0, -1.0]], sigma=[1.0, 1.0])
        yhat = model.predictions(np.array([[0.0], [1.0]]))

        np.testing.assert_allclose(yhat, [[1.0, 0.0], [3.0, -1.0]])
        np.testing.assert_allclose(model.mix, [0.5, 0.5])

    def test_model_weight_shape_checked(self):
        """Test weights must have one column per cluster"""
        with pytest.raises(ShapeMismatchError):
            CLRModel(beta=np.zeros((2, 2)), sigma=[1.0, 1.0], weights=np.ones((3, 3)))

    def test_augment(self):
        """Test the augmented design has a leading column of ones"""
        design = augment(np.array([[2.0], [3.0]]))

        np.testing.assert_array_equal(design, [[1, 2], [1, 3]])


class TestDocuments:
    """Test JSON document models"""

    def test_model_document_round_trip(self):
        """Test a model survives conversion to and from its document"""
        model = CLRModel(
            beta=[[1.0, 2.0], [0.5, -1.0]],
            sigma=[0.1, 0.2],
            weights=np.array([[0.9, 0.1], [0.2, 0.8]]),
        )
        document = ModelDocument.from_model(
            model, include_weights=True, provenance=Provenance(seed=4)
        )
        restored = ModelDocument.model_validate_json(
            document.model_dump_json()
        ).to_model()

        np.testing.assert_array_equal(restored.beta, model.beta)
        np.testing.assert_array_equal(restored.weights, model.weights)
        assert document.provenance.seed == 4

    def test_weights_omitted_by_default(self):
        """Test weights are only stored on request"""
        model = CLRModel(beta=np.zeros((2, 2)), sigma=[1.0, 1.0], weights=np.eye(2))

        assert ModelDocument.from_model(model).weights is None

    def test_inconsistent_cluster_count(self):
        """Test beta, sigma and mix must agree on K"""
        with pytest.raises(ValidationError):
            ModelDocument(beta=[[0.0, 1.0], [1.0, 0.0]], sigma=[1.0], mix=[0.5, 0.5])

    def test_truth_document_keeps_spec(self):
        """Test the generator spec is stored with the truth"""
        spec = ProblemSpec(K=2, p=1, cluster_sizes=[1, 1])
        truth = GroundTruth(
            beta=np.ones((2, 2)), sigma=[0.1, 0.2], labels=[0, 1], spec=spec
        )

        restored = TruthDocument.from_truth(truth).to_truth()

        assert restored.spec == spec
        np.testing.assert_array_equal(restored.labels, [0, 1])
