"""Pipeline orchestration: ingest, encode, augment, decode, evaluate and the baseline.

Every command writes its outputs in input order, whatever the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, TypeVar

from backend.errors import (
    AlignmentError,
    ConsistencyError,
    EmptyGraphError,
    LayoutToolkitError,
)
from backend.models.config import PipelineConfig
from backend.models.evaluation import (
    EvaluationReport,
    RestoredLayout,
    RestoredLayoutFile,
    SampleScore,
    VisualRelationshipSet,
)
from backend.models.graph import ClassFrequencies, GroundedSample
from backend.models.sequences import GridFrame, QuantizedLayout
from backend.services.augment_service import (
    Correspondence,
    augment_sample,
    build_correspondence,
    quantize_sample,
)
from backend.services.bacs_codec import execute_bacs, parse_bacs, serialize_bacs
from backend.services.baseline_translator import (
    load_table,
    predict_baseline,
    save_table,
    train_baseline,
)
from backend.services.config_service import load_pipeline_config
from backend.services.corpus_service import (
    dump_corpus,
    filter_corpus,
    load_corpus,
    preprocess_graph,
    read_split_manifest,
    split_corpus,
)
from backend.services.sf_codec import encode_sf, parse_nodes, parse_sf, serialize_nodes, serialize_sf
from backend.services.sleu_metric import layout_to_visual_relationships, sleu_score
from backend.services.svg_render import render_layout_svg

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SEQUENCE_SUFFIXES = (".sf", ".nodes", ".bacs", ".ids")


@dataclass
class SplitSummary:
    """Counts before and after filtering one split."""

    name: str
    samples_in: int
    samples_out: int
    objects_out: int
    relationships_out: int


@dataclass
class DecodeSummary:
    decoded: int = 0
    misaligned: int = 0
    errors: List[str] = field(default_factory=list)


def read_lines(path: Path) -> List[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def write_lines(path: Path, lines: Iterable[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


def sequence_paths(prefix: Path) -> Dict[str, Path]:
    """``.sf``, ``.nodes``, ``.bacs`` and ``.ids`` files sharing one prefix."""

    prefix = Path(prefix)
    return {suffix: prefix.with_name(prefix.name + suffix) for suffix in SEQUENCE_SUFFIXES}


def check_ids(ids_path: Path, samples: Sequence[GroundedSample]) -> None:
    """Require the id file to list the samples line by line."""

    ids = read_lines(ids_path)
    if len(ids) != len(samples):
        raise ConsistencyError(f"{ids_path} has {len(ids)} ids for {len(samples)} reference samples")
    for line, (sample_id, sample) in enumerate(zip(ids, samples), start=1):
        if sample_id != sample.sample_id:
            raise ConsistencyError(
                f"{ids_path} line {line}: id '{sample_id}' does not match reference '{sample.sample_id}'"
            )


class LayoutPipeline:
    """Runs the toolkit commands with one configuration."""

    def __init__(self, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()

    def _map(self, func: Callable[[T], R], items: Sequence[T]) -> List[R]:
        if self.config.jobs <= 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.jobs) as executor:
            return list(executor.map(func, items))

    # --- corpus ---

    def ingest(
        self, corpus_path: Path, manifests: Mapping[str, Path], out_dir: Path
    ) -> List[SplitSummary]:
        """Split the corpus by manifest and filter every split with training-split class counts."""

        samples = load_corpus(corpus_path)
        splits = split_corpus(
            samples, {name: read_split_manifest(path) for name, path in manifests.items()}
        )
        if "train" in splits:
            frequencies = ClassFrequencies.from_samples(splits["train"])
        else:
            logger.warning("No 'train' split given; class counts come from the whole corpus")
            frequencies = ClassFrequencies.from_samples(samples)

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        summaries = []
        for name, members in splits.items():
            kept = filter_corpus(members, self.config.filter, frequencies)
            (out_dir / f"{name}.json").write_text(dump_corpus(kept), encoding="utf-8")
            summaries.append(
                SplitSummary(
                    name=name,
                    samples_in=len(members),
                    samples_out=len(kept),
                    objects_out=sum(len(s.graph.nodes) for s in kept),
                    relationships_out=sum(len(s.graph.relationships) for s in kept),
                )
            )
            logger.info("Split %s: kept %d of %d samples", name, len(kept), len(members))
        return summaries

    def _preprocessed(self, corpus_path: Path) -> List[GroundedSample]:
        samples = []
        for sample in load_corpus(corpus_path):
            try:
                samples.append(preprocess_graph(sample))
            except EmptyGraphError as exc:
                logger.warning("Skipping: %s", exc)
        return samples

    # --- encoding ---

    def _write_correspondences(
        self, prefix: Path, rows: Iterable[Tuple[str, Correspondence]]
    ) -> int:
        paths = sequence_paths(prefix)
        ids, sf, nodes, bacs = [], [], [], []
        for sample_id, item in rows:
            ids.append(sample_id)
            sf.append(serialize_sf(item.sf))
            nodes.append(serialize_nodes(item.nodes))
            bacs.append(serialize_bacs(item.bacs))
        write_lines(paths[".ids"], ids)
        write_lines(paths[".sf"], sf)
        write_lines(paths[".nodes"], nodes)
        write_lines(paths[".bacs"], bacs)
        return len(ids)

    def encode(self, corpus_path: Path, out_prefix: Path) -> int:
        samples = self._preprocessed(corpus_path)
        encoding = self.config.encoding
        items = self._map(lambda sample: build_correspondence(sample, encoding), samples)
        count = self._write_correspondences(
            out_prefix, ((s.sample_id, item) for s, item in zip(samples, items))
        )
        logger.info("Encoded %d samples to %s", count, out_prefix)
        return count

    def augment(self, corpus_path: Path, out_prefix: Path) -> int:
        samples = self._preprocessed(corpus_path)
        config, encoding = self.config.augment, self.config.encoding
        variants = self._map(lambda sample: augment_sample(sample, config, encoding), samples)
        count = self._write_correspondences(
            out_prefix,
            ((s.sample_id, item) for s, group in zip(samples, variants) for item in group),
        )
        logger.info("Augmented %d samples into %d lines", len(samples), count)
        return count

    # --- restoration ---

    def decode_line(
        self, bacs_line: str, sf_line: str, nodes_line: str, frame: Optional[GridFrame] = None
    ) -> QuantizedLayout:
        encoding = self.config.encoding
        sf = parse_sf(sf_line)
        nodes = parse_nodes(nodes_line)
        if len(sf) != len(nodes):
            raise ConsistencyError(f"{len(sf)} SF triplets but {len(nodes)} node pairs")
        seq = parse_bacs(
            bacs_line,
            len(sf),
            encoding.mode,
            encoding.include_imgar,
            encoding.grid_max,
            encoding.quantizer.bins,
        )
        return execute_bacs(seq, nodes, encoding.grid_max, encoding.quantizer, frame)

    def decode(
        self,
        bacs_path: Path,
        sf_path: Path,
        nodes_path: Path,
        out_path: Path,
        ids_path: Optional[Path] = None,
        svg_dir: Optional[Path] = None,
    ) -> DecodeSummary:
        """Restore layouts from predicted BACS lines; misaligned lines are reported, not fatal."""

        bacs_lines, sf_lines, node_lines = read_lines(bacs_path), read_lines(sf_path), read_lines(nodes_path)
        if not len(bacs_lines) == len(sf_lines) == len(node_lines):
            raise ConsistencyError(
                f"line counts differ: {len(bacs_lines)} bacs, {len(sf_lines)} sf, {len(node_lines)} nodes"
            )
        ids: List[Optional[str]] = read_lines(ids_path) if ids_path else [None] * len(sf_lines)
        if len(ids) != len(sf_lines):
            raise ConsistencyError(f"{len(ids)} ids for {len(sf_lines)} lines")

        def restore(line: int) -> RestoredLayout:
            try:
                layout = self.decode_line(bacs_lines[line], sf_lines[line], node_lines[line])
            except AlignmentError as exc:
                return RestoredLayout(line=line + 1, id=ids[line], error=str(exc.at_line(line + 1)))
            return RestoredLayout(line=line + 1, id=ids[line], layout=layout)

        restored = self._map(restore, list(range(len(sf_lines))))
        summary = DecodeSummary()
        for entry in restored:
            if entry.layout is None:
                summary.misaligned += 1
                summary.errors.append(entry.error)
                logger.warning("Cannot align %s", entry.error)
            else:
                summary.decoded += 1
                if svg_dir is not None:
                    Path(svg_dir).mkdir(parents=True, exist_ok=True)
                    render_layout_svg(entry.layout, Path(svg_dir) / f"line{entry.line:06d}.svg")
        document = RestoredLayoutFile(
            decoded=summary.decoded, misaligned=summary.misaligned, layouts=restored
        )
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(document.model_dump_json(indent=2), encoding="utf-8")
        logger.info("Decoded %d lines, %d misaligned", summary.decoded, summary.misaligned)
        return summary

    # --- evaluation ---

    def _references(
        self, reference_paths: Sequence[Path]
    ) -> Tuple[List[GroundedSample], Dict[str, List[VisualRelationshipSet]], Dict[str, QuantizedLayout]]:
        primary = self._preprocessed(reference_paths[0])
        encoding = self.config.encoding
        quantized = {s.sample_id: quantize_sample(s, encoding) for s in primary}
        refs = {
            s.sample_id: [layout_to_visual_relationships(s.graph, quantized[s.sample_id].boxes)]
            for s in primary
        }
        for path in reference_paths[1:]:
            for sample in self._preprocessed(path):
                if sample.sample_id not in refs:
                    continue
                ql = quantize_sample(sample, encoding)
                extra = layout_to_visual_relationships(sample.graph, ql.boxes)
                if len(extra) != len(refs[sample.sample_id][0]):
                    logger.warning(
                        "Reference %s in %s has %d relationships, expected %d; skipped",
                        sample.sample_id,
                        path,
                        len(extra),
                        len(refs[sample.sample_id][0]),
                    )
                    continue
                refs[sample.sample_id].append(extra)
        return primary, refs, quantized

    def _predictions_from_bacs(
        self,
        path: Path,
        samples: Sequence[GroundedSample],
        quantized: Mapping[str, QuantizedLayout],
        ids_path: Optional[Path] = None,
    ) -> List[Tuple[Optional[VisualRelationshipSet], Optional[str]]]:
        lines = read_lines(path)
        if len(lines) != len(samples):
            raise ConsistencyError(
                f"{path} has {len(lines)} lines for {len(samples)} reference samples"
            )
        sidecar = ids_path or path.with_suffix(".ids")
        if ids_path is not None or sidecar.exists():
            check_ids(sidecar, samples)
        encoding = self.config.encoding

        def predict(index: int):
            sample = samples[index]
            _, nodes = encode_sf(sample.graph)
            try:
                seq = parse_bacs(
                    lines[index],
                    len(nodes),
                    encoding.mode,
                    encoding.include_imgar,
                    encoding.grid_max,
                    encoding.quantizer.bins,
                )
                layout = execute_bacs(
                    seq, nodes, encoding.grid_max, encoding.quantizer, quantized[sample.sample_id].frame
                )
            except AlignmentError as exc:
                return None, str(exc.at_line(index + 1))
            return layout_to_visual_relationships(sample.graph, layout.boxes), None

        return self._map(predict, list(range(len(samples))))

    def _predictions_from_layouts(
        self, path: Path, samples: Sequence[GroundedSample]
    ) -> List[Tuple[Optional[VisualRelationshipSet], Optional[str]]]:
        document = RestoredLayoutFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
        if len(document.layouts) != len(samples):
            raise ConsistencyError(
                f"{path} has {len(document.layouts)} layouts for {len(samples)} reference samples"
            )
        results = []
        for entry, sample in zip(document.layouts, samples):
            if entry.id is not None and entry.id != sample.sample_id:
                raise ConsistencyError(
                    f"{path} line {entry.line}: id '{entry.id}' does not match reference '{sample.sample_id}'"
                )
            if entry.layout is None:
                results.append((None, entry.error or f"line {entry.line}: not decoded"))
                continue
            try:
                results.append((layout_to_visual_relationships(sample.graph, entry.layout.boxes), None))
            except LayoutToolkitError as exc:
                results.append((None, f"line {entry.line}: {exc}"))
        return results

    def evaluate(
        self,
        prediction_paths: Sequence[Path],
        reference_paths: Sequence[Path],
        out_dir: Optional[Path] = None,
        ids_path: Optional[Path] = None,
    ) -> List[EvaluationReport]:
        """One report per prediction file per threshold; undecodable predictions score 0.

        Lines of a ``.bacs`` prediction are checked against ``ids_path``, or the
        ``.ids`` file next to the prediction when there is one.
        """

        if not reference_paths:
            raise ConsistencyError("at least one reference corpus is required")
        samples, refs, quantized = self._references(reference_paths)
        if not samples:
            raise ConsistencyError("reference corpus holds no scorable samples")
        configs = self.config.sleu_configs()
        max_order = self.config.max_order
        reports: List[EvaluationReport] = []

        for path in prediction_paths:
            path = Path(path)
            if path.suffix == ".bacs":
                predictions = self._predictions_from_bacs(path, samples, quantized, ids_path)
            else:
                predictions = self._predictions_from_layouts(path, samples)

            def score(index: int) -> List[SampleScore]:
                sample = samples[index]
                pred, error = predictions[index]
                if pred is not None:
                    try:
                        results = [sleu_score(pred, refs[sample.sample_id], cfg) for cfg in configs]
                    except LayoutToolkitError as exc:
                        pred, error = None, str(exc)
                if pred is None:
                    return [
                        SampleScore(id=sample.sample_id, sleu=0.0, p=[0.0] * max_order, flagged=True, error=error)
                        for _ in configs
                    ]
                return [
                    SampleScore(
                        id=sample.sample_id,
                        sleu=result.score,
                        p=result.per_order,
                        chosen_reference=result.chosen_reference,
                    )
                    for result in results
                ]

            per_sample = self._map(score, list(range(len(samples))))
            for position, cfg in enumerate(configs):
                rows = [scores[position] for scores in per_sample]
                report = EvaluationReport(
                    t_iou=cfg.t_iou,
                    max_order=cfg.max_order,
                    mean_sleu=min(1.0, sum(row.sleu for row in rows) / len(rows)),
                    prediction=path.name,
                    flagged=sum(1 for row in rows if row.flagged),
                    samples=rows,
                )
                reports.append(report)
                logger.info(
                    "%s @ IoU %.2f: mean-SLEU %.4f (%d flagged)",
                    path.name,
                    cfg.t_iou,
                    report.mean_sleu,
                    report.flagged,
                )
                if out_dir is not None:
                    Path(out_dir).mkdir(parents=True, exist_ok=True)
                    target = Path(out_dir) / f"{path.stem}.iou{cfg.t_iou:.2f}.json"
                    target.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        return reports

    # --- baseline ---

    def baseline_train(self, sf_path: Path, bacs_path: Path, table_path: Path) -> None:
        sf_lines, bacs_lines = read_lines(sf_path), read_lines(bacs_path)
        if len(sf_lines) != len(bacs_lines):
            raise ConsistencyError(f"{len(sf_lines)} SF lines but {len(bacs_lines)} BACS lines")
        encoding = self.config.encoding
        pairs = []
        for line, (sf_line, bacs_line) in enumerate(zip(sf_lines, bacs_lines), start=1):
            sf = parse_sf(sf_line)
            try:
                bacs = parse_bacs(
                    bacs_line,
                    len(sf),
                    encoding.mode,
                    encoding.include_imgar,
                    encoding.grid_max,
                    encoding.quantizer.bins,
                )
            except AlignmentError as exc:
                raise exc.at_line(line) from exc
            pairs.append((sf, bacs))
        save_table(train_baseline(pairs), table_path)

    def baseline_predict(self, sf_path: Path, table_path: Path, out_path: Path) -> int:
        """Write one predicted BACS line per SF line; the SF file's ids travel with them."""
        table = load_table(table_path)
        encoding = self.config.encoding
        sequences = [parse_sf(line) for line in read_lines(sf_path)]
        predictions = self._map(
            lambda sf: predict_baseline(
                sf,
                table,
                include_imgar=encoding.include_imgar,
                grid_max=encoding.grid_max,
                mode=encoding.mode,
            ),
            sequences,
        )
        write_lines(out_path, (serialize_bacs(seq) for seq in predictions))
        ids = Path(sf_path).with_suffix(".ids")
        if ids.exists():
            write_lines(Path(out_path).with_suffix(".ids"), read_lines(ids))
        logger.info("Wrote %d predictions to %s", len(predictions), out_path)
        return len(predictions)


# Global pipeline instance
_pipeline: Optional[LayoutPipeline] = None


def get_pipeline() -> LayoutPipeline:
    """Pipeline built from the environment configuration, created on first use."""
    global _pipeline
    if _pipeline is None:
        _pipeline = LayoutPipeline(load_pipeline_config())
    return _pipeline
