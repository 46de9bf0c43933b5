/** Audio playback behind a small interface so headless tests can stub it. */

export interface ArmPlayer {
  play(url: string): Promise<void>;
  stop(): void;
}

export class HtmlAudioPlayer implements ArmPlayer {
  private current: HTMLAudioElement | null = null;

  play(url: string): Promise<void> {
    this.stop();
    const el = new Audio(url);
    this.current = el;
    return new Promise((resolve, reject) => {
      el.addEventListener("ended", () => resolve(), { once: true });
      el.addEventListener("error", () =>
        reject(new Error(`playback failed for ${url}`)), { once: true });
      void el.play().catch(reject);
    });
  }

  stop(): void {
    if (this.current) {
      this.current.pause();
      this.current = null;
    }
  }
}
