// Conversions for the imperial form inputs; the backend only ever sees SI.

export const KG_PER_LB = 0.45359237;
export const M_PER_IN = 0.0254;

export function lbsToKg(lbs: number): number {
  return lbs * KG_PER_LB;
}

export function feetInchesToMeters(feet: number, inches: number): number {
  return (feet * 12 + inches) * M_PER_IN;
}

export interface BodyInputs {
  unitSystem: "metric" | "imperial";
  heightMeters?: number;
  heightFeet?: number;
  heightInches?: number;
  weightKg?: number;
  weightLbs?: number;
}

/** Resolve form inputs to SI; undefined fields stay undefined (optional). */
export function toSI(inputs: BodyInputs): { height?: number; weight?: number } {
  if (inputs.unitSystem === "metric") {
    return { height: inputs.heightMeters, weight: inputs.weightKg };
  }
  const feet = inputs.heightFeet;
  const inches = inputs.heightInches ?? 0;
  return {
    height: feet === undefined && inputs.heightInches === undefined
      ? undefined
      : feetInchesToMeters(feet ?? 0, inches),
    weight: inputs.weightLbs === undefined ? undefined : lbsToKg(inputs.weightLbs),
  };
}
