/**
 * Wire types shared with the engine's /api/v1 JSON contract.
 *
 * Boxes are [[latMin, lonMin], [latMax, lonMax]] (latitude first);
 * timestamps are ISO-8601 strings normalized to UTC.
 */

export type ColumnTypeLabel =
  | "categorical"
  | "numerical"
  | "temporal"
  | "spatial_latitude"
  | "spatial_longitude";

export type ResolutionLabel =
  | "second"
  | "minute"
  | "hour"
  | "day"
  | "week"
  | "month"
  | "quarter"
  | "year";

export type AggregationLabel = "first" | "count" | "sum" | "mean" | "max" | "min";

export type LatLon = [number, number];
export type BoxCorners = [LatLon, LatLon];

export interface QueryJson {
  keywords?: string[];
  temporal?: { start: string; end: string; resolution?: ResolutionLabel };
  spatial?: { box?: BoxCorners; area?: string };
  sources?: string[];
  required_types?: ColumnTypeLabel[];
  related?: { mode: "join" | "union" | "either"; dataset_id?: string };
  page?: { offset: number; limit: number };
}

export interface AugmentationSpecJson {
  mode: "join" | "union";
  pairs: [string, string][];
  agg?: Record<string, AggregationLabel>;
  temporal_resolution?: ResolutionLabel | null;
  spatial_grid_degrees?: number | null;
  include_columns?: string[] | null;
}

export interface NumericStatsJson {
  mean: number;
  variance: number;
  min: number;
  max: number;
}

export interface SummaryJson {
  kind: "numeric" | "temporal" | "spatial" | "categorical";
  ranges?: [number, number, number][];
  boxes?: [number, number, number, number, number][];
  total_count?: number;
  resolution?: ResolutionLabel;
  signature?: string[];
  cardinality?: number;
}

export interface ColumnProfileJson {
  name: string;
  detected_type: ColumnTypeLabel;
  user_type_override: ColumnTypeLabel | null;
  null_fraction: number;
  distinct_count_estimate: number;
  numeric_stats: NumericStatsJson | null;
  temporal_resolution: ResolutionLabel | null;
  top_values: [string, number][];
  summary: SummaryJson;
}

export interface DatasetProfileJson {
  profile_version: number;
  id: string;
  name: string;
  description: string;
  source: string;
  row_count: number;
  columns: ColumnProfileJson[];
  sample: string[][];
  spatial_coverage: [string, string][];
  custom_metadata: Record<string, string>;
  provenance: {
    source_plugin: string;
    locator: string;
    retrieved_at: string;
    content_hash: string;
    bytes_size: number;
  } | null;
}

export interface JoinPairJson {
  query_column: string;
  candidate_column: string;
  kind: "categorical" | "numeric" | "temporal" | "spatial";
  containment_score: number;
}

export interface UnionPairJson {
  query_column: string;
  candidate_column: string;
  name_similarity: number;
}

export type AugmentationMatchJson =
  | { mode: "join"; dataset_id: string; pairs: JoinPairJson[]; join_score: number }
  | {
      mode: "union";
      dataset_id: string;
      column_pairs: UnionPairJson[];
      union_score: number;
      matched_fraction: number;
    };

export interface SnippetJson {
  name: string;
  source: string;
  row_count: number;
  columns: { name: string; type: ColumnTypeLabel }[];
  top_values: Record<string, [string, number][]>;
  sample: string[][];
  temporal_extent?: [string, string];
  spatial_extent?: BoxCorners;
}

export interface SearchResultJson {
  dataset_id: string;
  total_score: number;
  score_breakdown: { keyword: number; filter_overlap: number; join: number; union: number };
  snippet: SnippetJson;
  augmentation: AugmentationMatchJson | null;
}

export interface SearchResponseJson {
  results: SearchResultJson[];
  total: number;
}

export interface MetadataFieldJson {
  name: string;
  type: "string" | "number" | "enum";
  required: boolean;
  enum_values: string[];
}

export interface ServiceConfigJson {
  custom_metadata_fields: MetadataFieldJson[];
  sources: string[];
  ranking_weights: Record<string, number>;
  areas: string[];
}

export interface StatsJson {
  dataset_count: number;
  per_source: Record<string, number>;
  per_type: Record<string, number>;
  generation: number;
}

export interface ErrorEnvelopeJson {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
