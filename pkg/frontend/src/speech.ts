/**
 * Spoken cue presentation through the platform's speech synthesis.
 *
 * The synthesizer is injected (window.speechSynthesis in the browser, a
 * fake in tests) and can be toggled off, since automated runs are silent.
 */

export interface UtteranceLike {
  text: string;
  rate?: number;
}

export interface SpeechSynthesisLike {
  speak(utterance: UtteranceLike): void;
  cancel(): void;
}

export interface PresentedCue {
  text: string;
  spoken: boolean;
  atMs: number;
}

export class CuePresenter {
  enabled: boolean;
  readonly log: PresentedCue[] = [];

  constructor(
    private readonly synth: SpeechSynthesisLike | null,
    private readonly makeUtterance: (text: string) => UtteranceLike = (text) => ({ text }),
    private readonly nowMs: () => number = () => Date.now(),
    enabled = false,
  ) {
    this.enabled = enabled && synth !== null;
  }

  toggle(): boolean {
    this.enabled = !this.enabled && this.synth !== null;
    return this.enabled;
  }

  /** Render a cue to text, optionally speaking it; returns the log entry. */
  present(kind: string): PresentedCue {
    const text = kind === "arrived" ? "arrived" : kind;
    const spoken = this.enabled && this.synth !== null;
    if (spoken) {
      this.synth!.cancel(); // stale directions are worse than silence
      this.synth!.speak(this.makeUtterance(text));
    }
    const entry = { text, spoken, atMs: this.nowMs() };
    this.log.push(entry);
    return entry;
  }
}

/** Browser helper: a presenter wired to window.speechSynthesis if present. */
export function browserCuePresenter(enabled = false): CuePresenter {
  const w = globalThis as unknown as {
    speechSynthesis?: SpeechSynthesisLike;
    SpeechSynthesisUtterance?: new (text: string) => UtteranceLike;
  };
  if (!w.speechSynthesis || !w.SpeechSynthesisUtterance) {
    return new CuePresenter(null);
  }
  return new CuePresenter(
    w.speechSynthesis,
    (text) => new w.SpeechSynthesisUtterance!(text),
    () => Date.now(),
    enabled,
  );
}
