export interface Question {
  id: string;
  text: string;
  choices: string[];
  image?: string;
}

export type NextResponse = { question: Question } | { done: true };

export interface AnswerResponse {
  accepted: boolean;
  complete: boolean;
}

export interface ResultResponse {
  prediction: "overweight" | "not_overweight";
  votes_true: number;
  votes_total: number;
}

/** Always sent in SI units; the form converts before submitting. */
export interface DemographicsRequest {
  height?: number; // meters
  weight?: number; // kilograms
  units: "metric";
  age?: number;
  gender?: string;
  location?: string;
  twitter?: string;
  instagram?: string;
  facebook?: string;
  comment?: string;
}

export interface DemographicsResponse {
  bmi?: number;
  agreed?: boolean;
}
