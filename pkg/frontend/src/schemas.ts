/**
 * Runtime schemas for the two payloads the UI writes: discovery queries and
 * augmentation specs. Serialization tests validate every outgoing body
 * against these, so a UI regression cannot silently drift off the wire
 * contract.
 */

import { z } from "zod";

export const resolutionSchema = z.enum([
  "second",
  "minute",
  "hour",
  "day",
  "week",
  "month",
  "quarter",
  "year",
]);

export const columnTypeSchema = z.enum([
  "categorical",
  "numerical",
  "temporal",
  "spatial_latitude",
  "spatial_longitude",
]);

const latLonSchema = z.tuple([z.number().min(-90).max(90), z.number().min(-180).max(180)]);

const boxSchema = z
  .tuple([latLonSchema, latLonSchema])
  .refine(([a, b]) => a[0] <= b[0] && a[1] <= b[1], {
    message: "box corners must be [[latMin, lonMin], [latMax, lonMax]]",
  });

const isoTimestamp = z
  .string()
  .regex(/^\d{4}(-\d{2}(-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d{1,6})?)?(Z|[+-]\d{2}:?\d{2})?)?)?)?$/);

export const querySchema = z
  .object({
    keywords: z.array(z.string().min(1)).optional(),
    temporal: z
      .object({
        start: isoTimestamp,
        end: isoTimestamp,
        resolution: resolutionSchema.optional(),
      })
      .optional(),
    spatial: z
      .object({ box: boxSchema.optional(), area: z.string().min(1).optional() })
      .refine((s) => (s.box === undefined) !== (s.area === undefined), {
        message: "spatial filter needs exactly one of box or area",
      })
      .optional(),
    sources: z.array(z.string().min(1)).optional(),
    required_types: z.array(columnTypeSchema).optional(),
    related: z
      .object({
        mode: z.enum(["join", "union", "either"]),
        dataset_id: z.string().min(1).optional(),
      })
      .optional(),
    page: z
      .object({ offset: z.number().int().min(0), limit: z.number().int().min(1) })
      .optional(),
  })
  .strict()
  .refine(
    (q) =>
      (q.keywords?.length ?? 0) > 0 ||
      q.temporal !== undefined ||
      q.spatial !== undefined ||
      q.sources !== undefined ||
      q.required_types !== undefined ||
      q.related !== undefined,
    { message: "query carries no constraint" },
  );

export const aggregationSchema = z.enum(["first", "count", "sum", "mean", "max", "min"]);

export const augmentationSpecSchema = z
  .object({
    mode: z.enum(["join", "union"]),
    pairs: z.array(z.tuple([z.string().min(1), z.string().min(1)])).min(1),
    agg: z.record(z.string(), aggregationSchema).optional(),
    temporal_resolution: resolutionSchema.nullable().optional(),
    spatial_grid_degrees: z.number().positive().nullable().optional(),
    include_columns: z.array(z.string()).nullable().optional(),
  })
  .strict();

export function assertValidQuery(doc: unknown): void {
  querySchema.parse(doc);
}

export function assertValidSpec(doc: unknown): void {
  augmentationSpecSchema.parse(doc);
}
