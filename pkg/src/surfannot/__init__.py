"""surfannot: annotate and analyse time series of coloured cell-surface meshes.

The package splits into a geometry core (:mod:`surfannot.mesh`), a .ply
sequence codec (:mod:`surfannot.plyio`), annotation state with undo
(:mod:`surfannot.annotation`), display composition (:mod:`surfannot.view`),
thresholded component measurements (:mod:`surfannot.analysis`), and a
project session with an HTTP API and CLI (:mod:`surfannot.session`,
:mod:`surfannot.server`, :mod:`surfannot.cli`).
"""

from .errors import (
    ManifestError,
    MarkerImportError,
    MeshValidationError,
    PlyParseError,
    SeriesLoadError,
    StaleHitError,
    StaleVersionError,
    SurfannotError,
    UnknownMarkerError,
)
from .mesh import (
    AdjacencyMap,
    ChannelData,
    DistanceMetric,
    PickHit,
    Ray,
    TriangleMesh,
    ValidationReport,
    build_adjacency,
    ray_pick,
    surface_distances,
    triangle_area,
    triangle_areas,
    validate_mesh,
)
from .plyio import (
    SurfaceFrame,
    SurfaceSeries,
    frames_equal,
    load_series,
    natural_key,
    parse_ply,
    save_labelled_series,
    write_ply,
)
from .annotation import (
    AnnotationState,
    BrushMode,
    BrushStroke,
    Marker,
    MarkerSet,
    format_float32,
    import_markers_csv,
)
from .view import (
    OpacityOverride,
    RenderMode,
    ThresholdWindow,
    apply_threshold,
    compose_display,
    set_opacity_region,
)
from .analysis import (
    ComponentResult,
    TrackRow,
    TrackTable,
    export_track_csv,
    extract_component,
    track_measurements,
)
from .session import (
    PlaybackCursor,
    Project,
    Session,
    frame_geometry_bytes,
    open_project,
    save_project,
    verify_manifest,
)

__version__ = "0.1.0"
