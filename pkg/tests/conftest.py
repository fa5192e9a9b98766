import numpy as np
import pytest
from loguru import logger
from typer.testing import CliRunner

from src.data_models import PruneConfig, TileConfig
from src.formats.matrices import DenseMatrix, ShflBWMatrix, VectorWiseMatrix
from src.pruning.scores import ImportanceMatrix
from unitesting_utils import demo_scores


@pytest.fixture
def scores_4x4() -> ImportanceMatrix:
    return demo_scores()


@pytest.fixture
def paired_scores() -> ImportanceMatrix:
    """Rows {0, 2} are large in columns {0, 1}, rows {1, 3} in columns {2, 3}."""
    return ImportanceMatrix(np.array([
        [9, 8, 1, 0],
        [0, 1, 9, 8],
        [8, 9, 0, 1],
        [1, 0, 8, 9],
    ], dtype=np.float64))


@pytest.fixture
def prune_cfg() -> PruneConfig:
    return PruneConfig(alpha=0.5, V=2, beta_factor=1.0, seed=0)


@pytest.fixture
def small_tiles() -> TileConfig:
    return TileConfig(T_M=4, T_N=4, T_K=2, regfile_size=64)


@pytest.fixture
def identity_2x2() -> ShflBWMatrix:
    """A single dense group storing the 2x2 identity, explicit zeros included."""
    core = VectorWiseMatrix(rows=2, cols=2, V=2, col_indices=(np.array([0, 1]),),
                            values=(np.eye(2, dtype=np.float32),))
    return ShflBWMatrix(core=core, row_indices=np.array([0, 1]))


@pytest.fixture
def b_2x2() -> DenseMatrix:
    return DenseMatrix.from_rows([[5, 6], [7, 8]])


@pytest.fixture
def runner():
    yield CliRunner()
    # the CLI installs a sink on the runner's stderr, which is gone after invoke
    logger.remove()


@pytest.fixture
def logged_warnings():
    messages: list[str] = []
    sink_id = logger.add(lambda message: messages.append(message.record['message']), level='WARNING')
    yield messages
    logger.remove(sink_id)
