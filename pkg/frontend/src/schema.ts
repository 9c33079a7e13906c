/**
 * Minimal JSON Schema checker covering the subset used by the shared
 * schema files (docs/schemas/*.json in the pipeline repo), so both
 * components validate interchange files against the same documents.
 */

export interface SchemaError {
  path: string;
  message: string;
}

type Schema = Record<string, any>;

export function validate(value: unknown, schema: Schema, path = '$'): SchemaError[] {
  const errors: SchemaError[] = [];
  const fail = (message: string) => errors.push({ path, message });

  const type = schema.type as string | undefined;
  if (type === 'object') {
    if (typeof value !== 'object' || value === null || Array.isArray(value)) {
      fail(`expected object, got ${describe(value)}`);
      return errors;
    }
    const obj = value as Record<string, unknown>;
    for (const key of schema.required ?? []) {
      if (!(key in obj)) fail(`missing required property '${key}'`);
    }
    const props: Record<string, Schema> = schema.properties ?? {};
    for (const [key, sub] of Object.entries(obj)) {
      if (key in props) {
        errors.push(...validate(sub, props[key], `${path}.${key}`));
      } else if (schema.additionalProperties === false) {
        fail(`unexpected property '${key}'`);
      }
    }
  } else if (type === 'array') {
    if (!Array.isArray(value)) {
      fail(`expected array, got ${describe(value)}`);
      return errors;
    }
    if (schema.minItems !== undefined && value.length < schema.minItems) {
      fail(`expected at least ${schema.minItems} items, got ${value.length}`);
    }
    if (schema.maxItems !== undefined && value.length > schema.maxItems) {
      fail(`expected at most ${schema.maxItems} items, got ${value.length}`);
    }
    if (schema.items) {
      value.forEach((item, i) =>
        errors.push(...validate(item, schema.items, `${path}[${i}]`)));
    }
  } else if (type === 'number' || type === 'integer') {
    if (typeof value !== 'number' || Number.isNaN(value)) {
      fail(`expected ${type}, got ${describe(value)}`);
      return errors;
    }
    if (type === 'integer' && !Number.isInteger(value)) {
      fail(`expected integer, got ${value}`);
    }
    if (schema.minimum !== undefined && value < schema.minimum) {
      fail(`${value} below minimum ${schema.minimum}`);
    }
    if (schema.maximum !== undefined && value > schema.maximum) {
      fail(`${value} above maximum ${schema.maximum}`);
    }
    if (schema.exclusiveMinimum !== undefined && value <= schema.exclusiveMinimum) {
      fail(`${value} not above ${schema.exclusiveMinimum}`);
    }
  } else if (type === 'string') {
    if (typeof value !== 'string') fail(`expected string, got ${describe(value)}`);
  }
  return errors;
}

function describe(value: unknown): string {
  if (value === null) return 'null';
  if (Array.isArray(value)) return 'array';
  return typeof value;
}

export function assertValid(value: unknown, schema: Schema, what: string): void {
  const errors = validate(value, schema);
  if (errors.length) {
    const detail = errors.slice(0, 5).map((e) => `${e.path}: ${e.message}`).join('; ');
    throw new Error(`${what} failed schema validation: ${detail}`);
  }
}
