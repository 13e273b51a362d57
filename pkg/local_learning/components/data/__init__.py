"""Dataset ingestion: IDX, CSV and synthetic blobs."""

from .blobs import gen_blobs
from .csv_data import read_csv_dataset, write_csv_dataset
from .dataset import DataSplit, Dataset, standardize
from .idx import decode_idx, encode_idx, parse_idx
from .loader import load_split
