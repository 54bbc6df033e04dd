import { ApiError, QuizApi } from "./api";
import { UiSession } from "./state";
import { BodyInputs, toSI } from "./units";
import type { DemographicsRequest, Question } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Single-page quiz flow: question screens, prediction reveal, voluntary
 * demographics, thanks. All state changes flow through backend
 * acknowledgments; the UI never computes predictions or BMI itself.
 */
export class App {
  session: UiSession | null = null;

  private screen: HTMLElement;
  private pending: Promise<void> = Promise.resolve();
  private retryAction: (() => Promise<void>) | null = null;
  private submitting = false;
  private lastPrediction = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly api: QuizApi,
  ) {
    this.root.innerHTML = "";
    this.screen = el("div", { id: "screen" });
    this.root.appendChild(this.screen);
    this.renderIntro();
  }

  /** Settles when every queued interaction has finished (used by tests). */
  idle(): Promise<void> {
    return this.pending;
  }

  private track(task: () => Promise<void>): Promise<void> {
    this.pending = this.pending.then(task).catch((err) => this.renderError(err));
    return this.pending;
  }

  private clear(): HTMLElement {
    this.screen.innerHTML = "";
    return this.screen;
  }

  // ---- intro ----------------------------------------------------------

  private renderIntro(): void {
    const box = this.clear();
    box.appendChild(el("h1", {}, "The food quiz"));
    box.appendChild(
      el("p", {}, "Answer a few quick questions about what you eat and we guess the rest."),
    );
    const button = el("button", { "data-testid": "start" }, "Start");
    button.addEventListener("click", () => this.start());
    box.appendChild(button);
  }

  start(): Promise<void> {
    return this.track(async () => {
      const sessionId = await this.api.createSession();
      this.session = new UiSession(sessionId);
      await this.loadNext();
    });
  }

  // ---- quiz -----------------------------------------------------------

  private async loadNext(): Promise<void> {
    const session = this.session!;
    const next = await this.api.nextQuestion(session.sessionId);
    if ("done" in next) {
      await this.showResult();
      return;
    }
    session.currentQuestion = next.question;
    this.renderQuestion(next.question);
  }

  private renderQuestion(question: Question): void {
    const box = this.clear();
    box.appendChild(el("p", { "data-testid": "progress" }, `Question ${this.session!.answeredCount + 1}`));
    box.appendChild(el("h2", { "data-testid": "question-text" }, question.text));
    if (question.image) {
      box.appendChild(el("img", { src: question.image, alt: "", "data-testid": "question-image" }));
    }
    const choices = el("div", { class: "choices" });
    question.choices.forEach((label, index) => {
      const button = el("button", { class: "choice", "data-testid": `choice-${index}` }, label);
      button.addEventListener("click", () => this.choose(index));
      choices.appendChild(button);
    });
    box.appendChild(choices);
  }

  choose(index: number): Promise<void> {
    // guard: a second click while a submission is in flight sends nothing
    if (this.submitting || !this.session?.currentQuestion) return this.pending;
    this.submitting = true;
    this.screen.querySelectorAll("button").forEach((b) => (b.disabled = true));
    const session = this.session;
    const question = session.currentQuestion!;

    const submit = async (): Promise<void> => {
      try {
        await this.api.submitAnswer(session.sessionId, question.id, index);
        session.answeredCount += 1;
        this.submitting = false;
        await this.loadNext();
      } catch (err) {
        this.submitting = false;
        if (err instanceof ApiError && err.status === 409) {
          await this.loadNext(); // someone answered already; resync
          return;
        }
        throw err;
      }
    };
    return this.track(() => this.withRetry(submit));
  }

  /** Network failures keep the session and offer a retry button. */
  private async withRetry(action: () => Promise<void>): Promise<void> {
    try {
      await action();
      this.retryAction = null;
    } catch (err) {
      if (err instanceof ApiError) throw err;
      this.retryAction = action;
      this.renderRetry(err);
    }
  }

  private renderRetry(err: unknown): void {
    const box = this.clear();
    box.appendChild(el("p", { "data-testid": "network-error" }, "Connection problem. Nothing was lost."));
    box.appendChild(el("p", { class: "detail" }, String(err)));
    const button = el("button", { "data-testid": "retry" }, "Retry");
    button.addEventListener("click", () => this.retry());
    box.appendChild(button);
  }

  retry(): Promise<void> {
    const action = this.retryAction;
    if (!action) return this.pending;
    this.retryAction = null;
    return this.track(() => this.withRetry(action));
  }

  // ---- result ---------------------------------------------------------

  private async showResult(): Promise<void> {
    const session = this.session!;
    const result = await this.api.result(session.sessionId);
    session.advance("result");
    this.lastPrediction = result.prediction;

    const box = this.clear();
    box.appendChild(el("h2", {}, "Our guess"));
    box.appendChild(
      el(
        "p",
        { "data-testid": "prediction", "data-prediction": result.prediction },
        result.prediction === "overweight" ? "overweight" : "not overweight",
      ),
    );
    box.appendChild(
      el(
        "p",
        { "data-testid": "votes" },
        `${result.votes_true} of ${result.votes_total} trees voted overweight`,
      ),
    );
    box.appendChild(
      el("p", { "data-testid": "answered-count" }, `You answered ${session.answeredCount} questions`),
    );
    const button = el("button", { "data-testid": "to-demographics" }, "Continue");
    button.addEventListener("click", () => this.continueToDemographics());
    box.appendChild(button);
  }

  continueToDemographics(): Promise<void> {
    return this.track(async () => {
      this.session!.advance("demographics");
      this.renderDemographics();
    });
  }

  // ---- demographics ---------------------------------------------------

  private renderDemographics(): void {
    const box = this.clear();
    box.appendChild(el("h2", {}, "About you (every field is optional)"));
    box.appendChild(
      el("p", {}, "If you share height and weight we can tell you whether the quiz got it right."),
    );

    const form = el("form", { "data-testid": "demographics-form" });
    form.addEventListener("submit", (e) => e.preventDefault());

    const unitToggle = el("div", { class: "units" });
    for (const system of ["metric", "imperial"] as const) {
      const label = el("label");
      const radio = el("input", {
        type: "radio",
        name: "units",
        value: system,
        "data-testid": `units-${system}`,
      });
      if (system === "metric") radio.setAttribute("checked", "checked");
      radio.addEventListener("change", () => this.toggleUnits(system));
      label.appendChild(radio);
      label.appendChild(document.createTextNode(system));
      unitToggle.appendChild(label);
    }
    form.appendChild(unitToggle);

    const metricFields = el("div", { "data-testid": "metric-fields" });
    metricFields.appendChild(labeled("Height (m)", "height-m"));
    metricFields.appendChild(labeled("Weight (kg)", "weight-kg"));
    form.appendChild(metricFields);

    const imperialFields = el("div", { "data-testid": "imperial-fields", hidden: "" });
    imperialFields.appendChild(labeled("Height (ft)", "height-ft"));
    imperialFields.appendChild(labeled("Height (in)", "height-in"));
    imperialFields.appendChild(labeled("Weight (lbs)", "weight-lbs"));
    form.appendChild(imperialFields);

    form.appendChild(labeled("Age", "age"));

    const genderLabel = el("label", {}, "Gender ");
    const gender = el("select", { "data-testid": "gender" });
    for (const option of ["undisclosed", "female", "male", "other"]) {
      gender.appendChild(el("option", { value: option }, option));
    }
    genderLabel.appendChild(gender);
    form.appendChild(genderLabel);

    form.appendChild(labeled("Location", "location", "text"));
    form.appendChild(labeled("Twitter", "twitter", "text"));
    form.appendChild(labeled("Instagram", "instagram", "text"));
    form.appendChild(labeled("Facebook", "facebook", "text"));

    const commentLabel = el("label", {}, "Comments ");
    commentLabel.appendChild(el("textarea", { "data-testid": "comment" }));
    form.appendChild(commentLabel);

    form.appendChild(el("p", { "data-testid": "field-error", class: "error", hidden: "" }));

    const submit = el("button", { "data-testid": "submit-demographics" }, "Submit");
    submit.addEventListener("click", () => this.submitDemographicsFromForm());
    form.appendChild(submit);
    const skip = el("button", { "data-testid": "skip-demographics" }, "Skip everything");
    skip.addEventListener("click", () => this.skipDemographics());
    form.appendChild(skip);

    box.appendChild(form);

    function labeled(text: string, id: string, type = "number"): HTMLElement {
      const label = el("label", {}, `${text} `);
      label.appendChild(el("input", { type, "data-testid": id, step: "any" }));
      return label;
    }
  }

  private toggleUnits(system: "metric" | "imperial"): void {
    const metric = this.screen.querySelector<HTMLElement>('[data-testid="metric-fields"]')!;
    const imperial = this.screen.querySelector<HTMLElement>('[data-testid="imperial-fields"]')!;
    metric.hidden = system !== "metric";
    imperial.hidden = system !== "imperial";
  }

  private numberField(id: string): number | undefined {
    const input = this.screen.querySelector<HTMLInputElement>(`[data-testid="${id}"]`);
    if (!input || input.value.trim() === "") return undefined;
    const value = Number(input.value);
    return Number.isFinite(value) ? value : undefined;
  }

  private textField(id: string): string | undefined {
    const input = this.screen.querySelector<HTMLInputElement | HTMLTextAreaElement>(
      `[data-testid="${id}"]`,
    );
    const value = input?.value.trim();
    return value ? value : undefined;
  }

  submitDemographicsFromForm(): Promise<void> {
    const system = this.screen.querySelector<HTMLInputElement>('[data-testid="units-imperial"]')
      ?.checked
      ? "imperial"
      : "metric";
    const inputs: BodyInputs = {
      unitSystem: system,
      heightMeters: this.numberField("height-m"),
      weightKg: this.numberField("weight-kg"),
      heightFeet: this.numberField("height-ft"),
      heightInches: this.numberField("height-in"),
      weightLbs: this.numberField("weight-lbs"),
    };
    const si = toSI(inputs);
    const gender = this.screen.querySelector<HTMLSelectElement>('[data-testid="gender"]')?.value;
    const request: DemographicsRequest = { units: "metric" };
    if (si.height !== undefined) request.height = si.height;
    if (si.weight !== undefined) request.weight = si.weight;
    const age = this.numberField("age");
    if (age !== undefined) request.age = age;
    if (gender && gender !== "undisclosed") request.gender = gender;
    for (const field of ["location", "twitter", "instagram", "facebook", "comment"] as const) {
      const value = this.textField(field);
      if (value !== undefined) request[field] = value;
    }
    return this.submitDemographics(request);
  }

  skipDemographics(): Promise<void> {
    return this.submitDemographics({ units: "metric" });
  }

  submitDemographics(request: DemographicsRequest): Promise<void> {
    return this.track(async () => {
      try {
        const response = await this.api.submitDemographics(this.session!.sessionId, request);
        this.session!.advance("thanks");
        this.renderThanks(response.bmi, response.agreed);
      } catch (err) {
        if (err instanceof ApiError && err.status === 422) {
          const error = this.screen.querySelector<HTMLElement>('[data-testid="field-error"]');
          if (error) {
            error.hidden = false;
            error.textContent = err.detail;
          }
          this.screen.querySelectorAll("button").forEach((b) => (b.disabled = false));
          return;
        }
        throw err;
      }
    });
  }

  // ---- thanks ---------------------------------------------------------

  private renderThanks(bmi?: number, agreed?: boolean): void {
    const box = this.clear();
    box.appendChild(el("h2", {}, "Thanks for taking part!"));
    if (bmi !== undefined) {
      box.appendChild(el("p", { "data-testid": "bmi" }, `Your BMI is ${bmi.toFixed(1)}`));
      const badge = el(
        "p",
        { "data-testid": "agreement", "data-agreed": String(agreed), class: agreed ? "ok" : "nope" },
        agreed
          ? `The quiz got it right: it guessed ${humanize(this.lastPrediction)}.`
          : `The quiz got it wrong: it guessed ${humanize(this.lastPrediction)}.`,
      );
      box.appendChild(badge);
    } else {
      box.appendChild(el("p", { "data-testid": "no-bmi" }, "Your answers were recorded."));
    }
  }

  private renderError(err: unknown): void {
    const box = this.clear();
    box.appendChild(el("p", { "data-testid": "fatal-error" }, "Something went wrong."));
    box.appendChild(el("p", { class: "detail" }, String(err)));
  }
}

function humanize(prediction: string): string {
  return prediction === "overweight" ? "overweight" : "not overweight";
}

export function createApp(root: HTMLElement, api: QuizApi): App {
  return new App(root, api);
}
