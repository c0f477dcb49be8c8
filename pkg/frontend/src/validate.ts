// Minimal JSON-schema checker covering the subset the action contract uses:
// oneOf, const, enum, type, properties, required, additionalProperties,
// minimum/maximum, minProperties.  Returns human-readable problems; an empty
// list means the document validates.

type Schema = Record<string, any>;

function typeOf(value: unknown): string {
  if (value === null) return "null";
  if (Array.isArray(value)) return "array";
  if (typeof value === "number") return Number.isInteger(value) ? "integer" : "number";
  return typeof value;
}

function checkNode(doc: unknown, schema: Schema, path: string, errors: string[]): void {
  if (schema.const !== undefined) {
    if (doc !== schema.const) errors.push(`${path}: expected ${JSON.stringify(schema.const)}`);
    return;
  }
  if (schema.enum !== undefined) {
    if (!schema.enum.includes(doc)) {
      errors.push(`${path}: must be one of ${JSON.stringify(schema.enum)}`);
    }
    return;
  }
  if (schema.type === "object") {
    if (typeOf(doc) !== "object") {
      errors.push(`${path}: expected an object`);
      return;
    }
    const obj = doc as Record<string, unknown>;
    const props: Record<string, Schema> = schema.properties ?? {};
    for (const key of schema.required ?? []) {
      if (!(key in obj)) errors.push(`${path}: missing required field '${key}'`);
    }
    if (schema.minProperties !== undefined && Object.keys(obj).length < schema.minProperties) {
      errors.push(`${path}: needs at least ${schema.minProperties} entries`);
    }
    for (const [key, value] of Object.entries(obj)) {
      if (key in props) {
        checkNode(value, props[key], `${path}.${key}`, errors);
      } else if (schema.additionalProperties === false) {
        errors.push(`${path}: unexpected field '${key}'`);
      } else if (typeof schema.additionalProperties === "object") {
        checkNode(value, schema.additionalProperties, `${path}.${key}`, errors);
      }
    }
    return;
  }
  if (schema.type === "string" && typeOf(doc) !== "string") {
    errors.push(`${path}: expected a string`);
    return;
  }
  if (schema.type === "boolean" && typeOf(doc) !== "boolean") {
    errors.push(`${path}: expected a boolean`);
    return;
  }
  if (schema.type === "integer" && typeOf(doc) !== "integer") {
    errors.push(`${path}: expected an integer`);
    return;
  }
  if (schema.type === "number" && !["number", "integer"].includes(typeOf(doc))) {
    errors.push(`${path}: expected a number`);
    return;
  }
  if (typeof doc === "number") {
    if (schema.minimum !== undefined && doc < schema.minimum) {
      errors.push(`${path}: ${doc} is below the minimum ${schema.minimum}`);
    }
    if (schema.maximum !== undefined && doc > schema.maximum) {
      errors.push(`${path}: ${doc} is above the maximum ${schema.maximum}`);
    }
  }
}

/** Validate an action document against the shared schema. */
export function validateAction(doc: unknown, schema: Schema): string[] {
  const variants: Schema[] = schema.oneOf ?? [schema];
  const docType = (doc as any)?.type;
  // pick the variant whose 'type' const matches, so messages stay specific
  const match = variants.find((v) => v.properties?.type?.const === docType);
  if (!match) {
    return [`unknown action type ${JSON.stringify(docType)}`];
  }
  const errors: string[] = [];
  checkNode(doc, match, "action", errors);
  return errors;
}
