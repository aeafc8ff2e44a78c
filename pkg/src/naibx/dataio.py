"""Dataset ingestion, train/test splitting, and model persistence.

Readers cover dense and sparse ARFF plus CSV-with-header.  Which
attributes are labels comes from a ``label_spec``:

* ``"meka"`` — the relation name carries ``-C k``; the first k attributes
  are labels (``-C -k`` puts them last).
* ``"xml:<path>"`` — an XML label manifest listing label names.
* ``"names:a,b,c"`` — an explicit comma-separated list.

Labels must be binary 0/1 attributes forming a contiguous prefix or
suffix block; features must be numeric.  Every parse failure raises a
distinct error carrying the offending line number, and a file either
yields exactly one instance per data row or fails hard -- rows are never
silently dropped.

Model files are a versioned, self-describing text format ("NAIBX 1").
Floats are serialized with round-trip-exact decimal representation, so a
saved and reloaded model reproduces its predictions bit for bit.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ElementTree
from dataclasses import dataclass

import numpy as np

from .model import GAUSSIAN, Instance, LabelUniverse, ModelStore, dense_features
from .textmodel import TokenCountTable

MODEL_MAGIC = "NAIBX 1"
MODEL_END = "END NAIBX"


class ParseError(ValueError):
    """Base for dataset parse failures; carries path and line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class HeaderError(ParseError):
    """Malformed or unsupported header declarations."""


class FeatureValueError(ParseError):
    """A data cell failed to parse as the declared attribute kind."""


class UnknownLabelError(ParseError):
    """A label name that does not match any declared attribute."""


class SparseIndexError(ParseError):
    """A sparse entry pointing outside the declared attributes."""


class ModelFormatError(ValueError):
    """Unreadable, truncated, or invariant-violating model file."""


@dataclass(frozen=True)
class DatasetHeader:
    """Shape of a parsed dataset: feature count, label block, and kinds."""

    name: str
    n: int
    label_names: tuple
    label_position: str  # "prefix" | "suffix"
    feature_kinds: tuple  # per feature attribute: "numeric" | "binary" | "count"


_RELATION_RE = re.compile(r"@relation\s+(?:'([^']*)'|\"([^\"]*)\"|(\S+))\s*$", re.IGNORECASE)
_ATTRIBUTE_RE = re.compile(
    r"@attribute\s+(?:'([^']*)'|\"([^\"]*)\"|(\S+))\s+(.+?)\s*$", re.IGNORECASE
)
_MEKA_C_RE = re.compile(r"-[Cc]\s+(-?\d+)")


def load_arff(path, label_spec):
    """Parse an ARFF file into (DatasetHeader, list of Instance)."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.readlines()

    relation = None
    relation_line = 0
    attributes = []  # (name, type_text, line_no)
    data_start = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        lowered = line.lower()
        if lowered.startswith("@relation"):
            match = _RELATION_RE.match(line)
            if not match:
                raise HeaderError(path, line_no, f"malformed @relation line: {line!r}")
            relation = next(g for g in match.groups() if g is not None)
            relation_line = line_no
        elif lowered.startswith("@attribute"):
            match = _ATTRIBUTE_RE.match(line)
            if not match:
                raise HeaderError(path, line_no, f"malformed @attribute line: {line!r}")
            name = next(g for g in match.groups()[:3] if g is not None)
            attributes.append((name, match.group(4).strip(), line_no))
        elif lowered.startswith("@data"):
            data_start = line_no
            break
        else:
            raise HeaderError(path, line_no, f"unexpected header line: {line!r}")
    if relation is None:
        raise HeaderError(path, 1, "missing @relation declaration")
    if data_start is None:
        raise HeaderError(path, len(lines), "missing @data section")
    if not attributes:
        raise HeaderError(path, relation_line, "no @attribute declarations")

    attr_names = [name for name, _, _ in attributes]
    if len(set(attr_names)) != len(attr_names):
        raise HeaderError(path, relation_line, "duplicate attribute names")
    name, label_names = _resolve_labels(path, relation, relation_line, attr_names, label_spec)
    header, feature_positions, label_positions = _build_header(
        path, name, attributes, label_names
    )

    instances = []
    for line_no in range(data_start + 1, len(lines) + 1):
        line = lines[line_no - 1].strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("{"):
            instances.append(
                _parse_sparse_row(path, line_no, line, attributes, feature_positions,
                                  label_positions, header)
            )
        else:
            instances.append(
                _parse_dense_row(path, line_no, line, attributes, feature_positions,
                                 label_positions, header)
            )
    return header, instances


def load_csv(path, label_spec):
    """Parse a CSV file with a header row into (DatasetHeader, instances)."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.readlines()
    if not lines or not lines[0].strip():
        raise HeaderError(path, 1, "missing CSV header row")
    attr_names = [cell.strip() for cell in lines[0].strip().split(",")]
    if len(set(attr_names)) != len(attr_names):
        raise HeaderError(path, 1, "duplicate column names")
    if isinstance(label_spec, str) and label_spec.strip().lower() == "meka":
        raise HeaderError(path, 1, "the meka label spec needs an ARFF relation tag")
    name, label_names = _resolve_labels(path, "csv", 1, attr_names, label_spec)
    attributes = [(attr, "numeric", 1) for attr in attr_names]
    header, feature_positions, label_positions = _build_header(
        path, name if name != "csv" else "csv", attributes, label_names
    )
    instances = []
    for line_no in range(2, len(lines) + 1):
        line = lines[line_no - 1].strip()
        if not line:
            continue
        instances.append(
            _parse_dense_row(path, line_no, line, attributes, feature_positions,
                             label_positions, header)
        )
    return header, instances


def load_dataset(path, label_spec):
    """Dispatch on file extension: .arff or .csv."""
    text = str(path)
    if text.lower().endswith(".csv"):
        return load_csv(path, label_spec)
    return load_arff(path, label_spec)


def _resolve_labels(path, relation, line_no, attr_names, label_spec):
    """Return (dataset name, label name tuple) for a label_spec."""
    if isinstance(label_spec, (list, tuple)):
        labels = tuple(label_spec)
        spec_kind = "names"
    else:
        spec = str(label_spec).strip()
        if spec.lower() == "none":
            # Features-only data (prediction time): no label columns.
            return relation, ()
        if spec.lower() == "meka":
            match = _MEKA_C_RE.search(relation)
            if not match:
                raise HeaderError(path, line_no,
                                  f"relation {relation!r} carries no -C label count")
            k = int(match.group(1))
            if k == 0 or abs(k) >= len(attr_names):
                raise HeaderError(path, line_no,
                                  f"-C {k} leaves no labels or no features")
            labels = tuple(attr_names[:k] if k > 0 else attr_names[k:])
            name = _MEKA_C_RE.sub("", relation).strip().rstrip(":").strip()
            return (name or relation), labels
        if spec.lower().startswith("xml:"):
            labels = tuple(_read_xml_labels(path, line_no, spec[4:]))
            spec_kind = "xml"
        elif spec.lower().startswith("names:"):
            labels = tuple(part.strip() for part in spec[6:].split(",") if part.strip())
            spec_kind = "names"
        else:
            raise HeaderError(path, line_no, f"unsupported label spec {label_spec!r}")
    if not labels:
        raise UnknownLabelError(path, line_no, "label spec names no labels")
    if len(set(labels)) != len(labels):
        raise UnknownLabelError(path, line_no, f"duplicate label names in {spec_kind} spec")
    missing = [label for label in labels if label not in attr_names]
    if missing:
        raise UnknownLabelError(path, line_no,
                                f"label names not among attributes: {missing!r}")
    return relation, labels


def _read_xml_labels(path, line_no, xml_path):
    try:
        tree = ElementTree.parse(xml_path)
    except (OSError, ElementTree.ParseError) as exc:
        raise UnknownLabelError(path, line_no, f"cannot read label manifest: {exc}") from exc
    labels = [
        element.get("name")
        for element in tree.iter()
        if element.tag.rsplit("}", 1)[-1] == "label" and element.get("name")
    ]
    if not labels:
        raise UnknownLabelError(path, line_no, f"no labels found in {xml_path}")
    return labels


def _build_header(path, name, attributes, label_names):
    attr_names = [attr_name for attr_name, _, _ in attributes]
    positions = {attr_name: i for i, attr_name in enumerate(attr_names)}
    label_positions = [positions[label] for label in label_names]
    k = len(label_positions)
    total = len(attributes)
    if sorted(label_positions) == list(range(k)):
        label_position = "prefix"
    elif sorted(label_positions) == list(range(total - k, total)):
        label_position = "suffix"
    else:
        raise HeaderError(
            path, attributes[0][2],
            "label attributes must form a contiguous prefix or suffix block",
        )
    if total == k:
        raise HeaderError(path, attributes[0][2], "dataset has no feature attributes")

    label_set = set(label_positions)
    feature_positions = [i for i in range(total) if i not in label_set]
    kinds = []
    for i in feature_positions:
        attr_name, type_text, line_no = attributes[i]
        kind = _feature_kind(type_text)
        if kind is None:
            raise HeaderError(path, line_no,
                              f"feature attribute {attr_name!r} must be numeric, "
                              f"got {type_text!r}")
        kinds.append(kind)
    for i in label_positions:
        attr_name, type_text, line_no = attributes[i]
        if not _is_binary_attr(type_text):
            raise HeaderError(path, line_no,
                              f"label attribute {attr_name!r} must be binary 0/1, "
                              f"got {type_text!r}")
    header = DatasetHeader(
        name=name,
        n=len(feature_positions),
        label_names=tuple(label_names),
        label_position=label_position,
        feature_kinds=tuple(kinds),
    )
    return header, feature_positions, label_positions


def _feature_kind(type_text):
    lowered = type_text.strip().lower()
    if lowered in ("numeric", "real"):
        return "numeric"
    if lowered == "integer":
        return "count"
    if _is_binary_nominal(type_text):
        return "binary"
    return None


def _is_binary_nominal(type_text) -> bool:
    text = type_text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        return False
    values = {value.strip().strip("'\"") for value in text[1:-1].split(",")}
    return values <= {"0", "1"} and bool(values)


def _is_binary_attr(type_text) -> bool:
    lowered = type_text.strip().lower()
    return lowered in ("numeric", "real", "integer") or _is_binary_nominal(type_text)


def _parse_value(path, line_no, token, kind):
    token = token.strip().strip("'\"")
    if token == "?":
        raise FeatureValueError(path, line_no,
                                "missing value '?' is not supported")
    try:
        value = float(token)
    except ValueError:
        raise FeatureValueError(path, line_no,
                                f"non-numeric {kind} token {token!r}") from None
    if not np.isfinite(value):
        raise FeatureValueError(path, line_no, f"non-finite {kind} value {token!r}")
    return value


def _label_membership(path, line_no, token):
    value = _parse_value(path, line_no, token, "label")
    if value not in (0.0, 1.0):
        raise FeatureValueError(path, line_no, f"label value must be 0 or 1, got {token!r}")
    return value == 1.0


def _parse_dense_row(path, line_no, line, attributes, feature_positions,
                     label_positions, header):
    tokens = [token.strip() for token in line.split(",")]
    if len(tokens) != len(attributes):
        raise FeatureValueError(
            path, line_no,
            f"expected {len(attributes)} values, got {len(tokens)}",
        )
    features = np.array(
        [_parse_value(path, line_no, tokens[i], "feature") for i in feature_positions]
    )
    present = {
        i for i in label_positions if _label_membership(path, line_no, tokens[i])
    }
    target = tuple(
        name for name, i in zip(header.label_names, label_positions) if i in present
    ) if header.label_names else None
    return Instance(features=features, target=target)


def _parse_sparse_row(path, line_no, line, attributes, feature_positions,
                      label_positions, header):
    body = line.strip()
    if not body.endswith("}"):
        raise FeatureValueError(path, line_no, "sparse row missing closing '}'")
    body = body[1:-1].strip()
    entries = {}
    if body:
        for chunk in body.split(","):
            parts = chunk.strip().split(None, 1)
            if len(parts) != 2:
                raise FeatureValueError(path, line_no,
                                        f"malformed sparse entry {chunk.strip()!r}")
            try:
                index = int(parts[0])
            except ValueError:
                raise SparseIndexError(path, line_no,
                                       f"non-integer sparse index {parts[0]!r}") from None
            if not 0 <= index < len(attributes):
                raise SparseIndexError(
                    path, line_no,
                    f"sparse index {index} outside {len(attributes)} attributes",
                )
            if index in entries:
                raise FeatureValueError(path, line_no, f"duplicate sparse index {index}")
            entries[index] = parts[1]
    feature_order = {attr_index: j for j, attr_index in enumerate(feature_positions)}
    label_set = set(label_positions)
    features = {}
    present = set()
    for index, token in entries.items():
        if index in label_set:
            if _label_membership(path, line_no, token):
                present.add(index)
        else:
            value = _parse_value(path, line_no, token, "feature")
            if value != 0.0:
                features[feature_order[index]] = value
    target = tuple(
        name for name, i in zip(header.label_names, label_positions) if i in present
    ) if header.label_names else None
    return Instance(features=features, target=target)


def save_arff(path, header: DatasetHeader, instances) -> None:
    """Write a dense ARFF with a MEKA-style -C relation tag.

    Reparsing the written file with label_spec="meka" reproduces the same
    header and instance values.
    """
    k = len(header.label_names)
    c = k if header.label_position == "prefix" else -k
    label_attrs = [f"@attribute {name} {{0,1}}" for name in header.label_names]
    kind_map = {"numeric": "numeric", "count": "integer", "binary": "{0,1}"}
    feature_attrs = [
        f"@attribute f{i} {kind_map[kind]}" for i, kind in enumerate(header.feature_kinds)
    ]
    if header.label_position == "prefix":
        attr_lines = label_attrs + feature_attrs
    else:
        attr_lines = feature_attrs + label_attrs
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"@relation '{header.name}: -C {c}'\n")
        for line in attr_lines:
            handle.write(line + "\n")
        handle.write("@data\n")
        for instance in instances:
            dense = dense_features(instance.features, header.n)
            target = set(instance.target or ())
            label_cells = ["1" if name in target else "0" for name in header.label_names]
            feature_cells = [repr(float(v)) for v in dense]
            cells = (label_cells + feature_cells if header.label_position == "prefix"
                     else feature_cells + label_cells)
            handle.write(",".join(cells) + "\n")


def datasets_equal(a, b) -> bool:
    """Value equality of two (header, instances) pairs.

    Features compare densely, so a sparse and a dense encoding of the
    same rows are equal.
    """
    header_a, instances_a = a
    header_b, instances_b = b
    if header_a != header_b or len(instances_a) != len(instances_b):
        return False
    for left, right in zip(instances_a, instances_b):
        if (left.target or ()) != (right.target or ()):
            return False
        if not np.array_equal(
            dense_features(left.features, header_a.n),
            dense_features(right.features, header_b.n),
        ):
            return False
    return True


def split_train_test(instances, fraction: float, seed: int):
    """Deterministic seeded shuffle-and-split; sizes within 1 of fraction*N."""
    instances = list(instances)
    if not instances:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(instances))
    cut = int(round(fraction * len(instances)))
    train = [instances[i] for i in order[:cut]]
    test = [instances[i] for i in order[cut:]]
    return train, test


# -----------------------------------------------------------------------
# Model persistence
# -----------------------------------------------------------------------


def save_model(store: ModelStore, path) -> None:
    """Serialize a ModelStore to the versioned NAIBX text format."""
    with open(path, "w", encoding="utf-8") as handle:
        write = handle.write
        write(MODEL_MAGIC + "\n")
        write(f"likelihood {store.likelihood_model}\n")
        write(f"n {store.n}\n")
        write(f"variance_floor_abs {store.variance_floor_abs!r}\n")
        write(f"variance_floor_rel {store.variance_floor_rel!r}\n")
        write(f"labels {store.universe.size}\n")
        for label in store.universe:
            write(f"{label}\n")
        write(f"total {store.total}\n")
        _write_int_row(write, "size_counts", store.size_counts)
        _write_int_row(write, "label_counts", store.label_counts)
        _write_int_matrix(write, "pair_counts", store.pair_counts)
        _write_int_matrix(write, "size_given_label", store.size_given_label)
        if store.likelihood_model == GAUSSIAN:
            _write_float_matrix(write, "mean_given_label", store.mean_given_label)
            _write_float_matrix(write, "m2_given_label", store.m2_given_label)
            _write_float_matrix(write, "mean_given_size", store.mean_given_size)
            _write_float_matrix(write, "m2_given_size", store.m2_given_size)
            _write_float_matrix(write, "mean_global", store.mean_global[None, :])
            _write_float_matrix(write, "m2_global", store.m2_global[None, :])
        else:
            _write_token_table(write, "label_tokens", store.label_tokens)
            _write_token_table(write, "size_tokens", store.size_tokens)
        write(MODEL_END + "\n")


def load_model(path) -> ModelStore:
    """Read a NAIBX model file; rejects unknown versions, truncation, and
    stores that violate the structural invariants."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    reader = _Reader(path, lines)
    if reader.next_line() != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a '{MODEL_MAGIC}' model file")
    likelihood = reader.tagged("likelihood")
    n = int(reader.tagged("n"))
    floor_abs = float(reader.tagged("variance_floor_abs"))
    floor_rel = float(reader.tagged("variance_floor_rel"))
    label_count = int(reader.tagged("labels"))
    labels = tuple(reader.next_line() for _ in range(label_count))
    try:
        store = ModelStore(LabelUniverse(labels), n, likelihood)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    store.variance_floor_abs = floor_abs
    store.variance_floor_rel = floor_rel
    size = store.universe_size
    store.total = int(reader.tagged("total"))
    store.size_counts = reader.int_row("size_counts", size + 1)
    store.label_counts = reader.int_row("label_counts", size)
    store.pair_counts = reader.int_matrix("pair_counts", size, size)
    store.size_given_label = reader.int_matrix("size_given_label", size, size + 1)
    if likelihood == GAUSSIAN:
        store.mean_given_label = reader.float_matrix("mean_given_label", size, n)
        store.m2_given_label = reader.float_matrix("m2_given_label", size, n)
        store.mean_given_size = reader.float_matrix("mean_given_size", size + 1, n)
        store.m2_given_size = reader.float_matrix("m2_given_size", size + 1, n)
        store.mean_global = reader.float_matrix("mean_global", 1, n)[0]
        store.m2_global = reader.float_matrix("m2_global", 1, n)[0]
    else:
        store.label_tokens = reader.token_table("label_tokens", n, likelihood)
        store.size_tokens = reader.token_table("size_tokens", n, likelihood)
    if reader.next_line() != MODEL_END:
        raise ModelFormatError(f"{path}: missing '{MODEL_END}' terminator")
    try:
        store.validate()
    except ValueError as exc:
        raise ModelFormatError(f"{path}: invariant violation: {exc}") from exc
    return store


def _write_int_row(write, tag, row) -> None:
    write(tag + " " + " ".join(str(int(v)) for v in row) + "\n")


def _write_int_matrix(write, tag, matrix) -> None:
    write(f"{tag}\n")
    for row in matrix:
        write(" ".join(str(int(v)) for v in row) + "\n")


def _write_float_matrix(write, tag, matrix) -> None:
    write(f"{tag}\n")
    for row in matrix:
        write(" ".join(repr(float(v)) for v in row) + "\n")


def _write_token_table(write, tag, table: TokenCountTable) -> None:
    conditions = sorted(table.counts)
    write(f"{tag} {len(conditions)}\n")
    for condition in conditions:
        row = table.counts[condition]
        cells = " ".join(f"{index}:{row[index]!r}" for index in sorted(row))
        total = table.condition_totals.get(condition, 0)
        write(f"{condition} {total!r}" + (f" {cells}" if cells else "") + "\n")


class _Reader:
    """Sequential line reader that fails loudly on truncation."""

    def __init__(self, path, lines):
        self.path = path
        self.lines = lines
        self.cursor = 0

    def next_line(self) -> str:
        if self.cursor >= len(self.lines):
            raise ModelFormatError(f"{self.path}: truncated model file")
        line = self.lines[self.cursor]
        self.cursor += 1
        return line

    def tagged(self, tag: str) -> str:
        line = self.next_line()
        if not line.startswith(tag + " "):
            raise ModelFormatError(f"{self.path}: expected '{tag} ...', got {line!r}")
        return line[len(tag) + 1:]

    def _row(self, text: str, width: int, cast):
        parts = text.split()
        if len(parts) != width:
            raise ModelFormatError(
                f"{self.path}: expected {width} values, got {len(parts)}"
            )
        try:
            return np.array([cast(part) for part in parts],
                            dtype=np.int64 if cast is int else float)
        except ValueError as exc:
            raise ModelFormatError(f"{self.path}: bad value in row: {exc}") from exc

    def int_row(self, tag: str, width: int):
        return self._row(self.tagged(tag), width, int)

    def _matrix(self, tag: str, rows: int, width: int, cast):
        line = self.next_line()
        if line != tag:
            raise ModelFormatError(f"{self.path}: expected '{tag}', got {line!r}")
        return np.stack([self._row(self.next_line(), width, cast) for _ in range(rows)])

    def int_matrix(self, tag: str, rows: int, width: int):
        return self._matrix(tag, rows, width, int)

    def float_matrix(self, tag: str, rows: int, width: int):
        return self._matrix(tag, rows, width, float)

    def token_table(self, tag: str, vocabulary: int, mode: str) -> TokenCountTable:
        count = int(self.tagged(tag))
        table = TokenCountTable(vocabulary, mode)
        for _ in range(count):
            parts = self.next_line().split()
            if len(parts) < 2:
                raise ModelFormatError(f"{self.path}: malformed token table row")
            condition = int(parts[0])
            table.condition_totals[condition] = _num(parts[1])
            row = {}
            for cell in parts[2:]:
                index_text, _, count_text = cell.partition(":")
                row[int(index_text)] = _num(count_text)
            table.counts[condition] = row
        return table


def _num(text: str):
    value = float(text)
    return int(value) if value.is_integer() else value
