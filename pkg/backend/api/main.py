"""FastAPI application exposing the codecs and the metric to external sequence models."""

from typing import Dict, List, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from backend import __version__
from backend.errors import AlignmentError, LayoutToolkitError
from backend.models import (
    CorpusSample,
    GridFrame,
    LabeledGridBox,
    QuantizedLayout,
    SceneGraph,
    SleuConfig,
    SleuResult,
)
from backend.services.augment_service import build_correspondence
from backend.services.bacs_codec import serialize_bacs
from backend.services.corpus_service import convert_sample, preprocess_graph
from backend.services.pipeline import get_pipeline
from backend.services.sf_codec import serialize_nodes, serialize_sf
from backend.services.sleu_metric import layout_to_visual_relationships, sleu_score

# Initialize FastAPI app
app = FastAPI(
    title="Scene Graph Layout Toolkit",
    description="Scene graph and layout sequence codecs with SLEU scoring",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class EncodedLines(BaseModel):
    id: str
    sf: str
    nodes: str
    bacs: str


class DecodeRequest(BaseModel):
    bacs: str
    sf: str
    nodes: str
    frame: Optional[GridFrame] = Field(default=None, description="Reference canvas, if known")


class EvaluateRequest(BaseModel):
    graph: SceneGraph
    prediction: Dict[int, LabeledGridBox]
    references: List[Dict[int, LabeledGridBox]] = Field(min_length=1)
    t_iou: float = Field(default=0.5, ge=0.0, le=1.0)
    max_order: int = Field(default=3, ge=1)


@app.exception_handler(LayoutToolkitError)
async def toolkit_error_handler(request: Request, exc: LayoutToolkitError):
    content = {"detail": str(exc)}
    if isinstance(exc, AlignmentError):
        content["position"] = exc.position
        content["expected"] = list(exc.expected)
    return JSONResponse(status_code=422, content=content)


@app.get("/api/health")
async def health():
    config = get_pipeline().config.encoding
    return {
        "status": "healthy",
        "version": __version__,
        "grid_max": config.grid_max,
        "mode": config.mode.value,
        "include_imgar": config.include_imgar,
    }


@app.post("/api/encode", response_model=EncodedLines)
async def encode(sample: CorpusSample):
    """Encode one corpus sample into its SF, node and BACS lines."""
    grounded = preprocess_graph(convert_sample(sample))
    item = build_correspondence(grounded, get_pipeline().config.encoding)
    return EncodedLines(
        id=grounded.sample_id,
        sf=serialize_sf(item.sf),
        nodes=serialize_nodes(item.nodes),
        bacs=serialize_bacs(item.bacs),
    )


@app.post("/api/decode", response_model=QuantizedLayout)
async def decode(request: DecodeRequest):
    """Restore the layout a predicted BACS line describes."""
    return get_pipeline().decode_line(request.bacs, request.sf, request.nodes, request.frame)


@app.post("/api/evaluate", response_model=SleuResult)
async def evaluate(request: EvaluateRequest):
    """SLEU of one predicted layout against one or more reference layouts of the same graph."""
    pred = layout_to_visual_relationships(request.graph, request.prediction)
    refs = [layout_to_visual_relationships(request.graph, ref) for ref in request.references]
    return sleu_score(pred, refs, SleuConfig(t_iou=request.t_iou, max_order=request.max_order))
